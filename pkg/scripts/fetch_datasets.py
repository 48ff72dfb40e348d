#!/usr/bin/env python3
"""Download the benchmark datasets into ./datasets (or $SWMLDA_DATA).

Thin wrapper around ``swmlda fetch-datasets``; accepts the same arguments.
"""

import sys

from swmlda.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["fetch-datasets", *sys.argv[1:]]))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swmlda.data import (MultiLabelDataset, apply_standardizer, fit_standardizer, load_arff,
                         load_csv, read_label_xml, write_csv)
from swmlda.errors import ConfigError, DimensionError, FormatError, ParseError


def _write(path, text):
    path.write_text(text)
    return path


# -- CSV ---------------------------------------------------------------------


def test_csv_minimal(tmp_path):
    ds = load_csv(_write(tmp_path / "a.csv", "f:a,f:b,l:p\n1.0,2.0,1\n"))
    assert (ds.n_features, ds.n_classes, ds.n_instances) == (2, 1, 1)
    assert ds.Y.tolist() == [[1]]
    assert ds.feature_names == ("a", "b") and ds.class_names == ("p",)


def test_csv_label_cell_out_of_domain(tmp_path):
    with pytest.raises(ParseError) as err:
        load_csv(_write(tmp_path / "a.csv", "f:a,l:p\n1.0,0\n1.0,2\n"))
    assert err.value.row == 3 and err.value.column == "l:p"


def test_csv_identical_rows(tmp_path):
    ds = load_csv(_write(tmp_path / "a.csv", "f:a,f:b,l:p\n1.5,2,0\n1.5,2,0\n"))
    assert ds.n_instances == 2
    np.testing.assert_array_equal(ds.X[:, 0], ds.X[:, 1])


def test_csv_header_without_prefix(tmp_path):
    with pytest.raises(FormatError, match="'x'"):
        load_csv(_write(tmp_path / "a.csv", "f:a,x,l:p\n1,2,0\n"))


def test_csv_ragged_row(tmp_path):
    with pytest.raises(ParseError) as err:
        load_csv(_write(tmp_path / "a.csv", "f:a,l:p\n1,0\n1\n"))
    assert err.value.row == 3


def test_csv_bad_number(tmp_path):
    with pytest.raises(ParseError) as err:
        load_csv(_write(tmp_path / "a.csv", "f:a,l:p\nabc,0\n"))
    assert err.value.column == "f:a"


def test_csv_round_trip_is_bit_exact(tmp_path, rng):
    X = rng.normal(size=(4, 9)) * 10.0 ** rng.integers(-8, 8, size=(4, 9))
    Y = (rng.random((3, 9)) < 0.5).astype(np.int8)
    ds = MultiLabelDataset(X, Y, ("a", "b", "c", "d"), ("x", "y", "z"))
    write_csv(ds, tmp_path / "r.csv")
    back = load_csv(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.Y, ds.Y)
    assert np.array_equal(back.X, ds.X)
    assert back.feature_names == ds.feature_names and back.class_names == ds.class_names


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_round_trip_property(tmp_path_factory, X):
    Y = np.zeros((2, X.shape[1]), dtype=np.int8)
    Y[0, ::2] = 1
    ds = MultiLabelDataset(X, Y, tuple(f"f{j}" for j in range(X.shape[0])), ("a", "b"))
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(ds, path)
    back = load_csv(path)
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.Y, ds.Y)


# -- dataset invariants ------------------------------------------------------------


def test_dataset_rejects_non_binary_labels():
    with pytest.raises(Exception):
        MultiLabelDataset(np.zeros((1, 2)), np.array([[0, 2]]))


def test_dataset_rejects_mismatched_instances():
    with pytest.raises(DimensionError):
        MultiLabelDataset(np.zeros((1, 3)), np.zeros((1, 2)))


def test_dataset_arrays_are_read_only(small_ds):
    with pytest.raises(ValueError):
        small_ds.X[0, 0] = 1.0


# -- ARFF --------------------------------------------------------------------

DENSE = """% comment
@relation toy
@attribute a numeric
@attribute 'b c' real
@attribute lab {0,1}
@data
1.0,2.0,1
3,4,0
"""


def test_arff_dense(tmp_path):
    ds = load_arff(_write(tmp_path / "d.arff", DENSE), ["lab"])
    assert (ds.n_features, ds.n_classes, ds.n_instances) == (2, 1, 2)
    assert ds.feature_names == ("a", "b c")
    np.testing.assert_array_equal(ds.X, [[1, 3], [2, 4]])
    np.testing.assert_array_equal(ds.Y, [[1, 0]])


def test_arff_sparse_defaults_to_zero(tmp_path):
    text = ("@relation s\n" + "".join(f"@attribute a{j} numeric\n" for j in range(4))
            + "@attribute y {0,1}\n@data\n{0 1.5, 4 1}\n{2 -1}\n")
    ds = load_arff(_write(tmp_path / "s.arff", text), ["y"])
    np.testing.assert_array_equal(ds.X[:, 0], [1.5, 0, 0, 0])
    np.testing.assert_array_equal(ds.X[:, 1], [0, 0, -1, 0])
    np.testing.assert_array_equal(ds.Y, [[1, 0]])


def test_arff_malformed_sparse_entry_reports_line(tmp_path):
    text = "@relation s\n@attribute a numeric\n@attribute y {0,1}\n@data\n{0 1, 1}\n"
    with pytest.raises(ParseError, match="line 5"):
        load_arff(_write(tmp_path / "s.arff", text), ["y"])


def test_arff_label_with_wrong_domain(tmp_path):
    text = "@relation s\n@attribute a numeric\n@attribute y numeric\n@data\n1,0\n"
    with pytest.raises(FormatError):
        load_arff(_write(tmp_path / "s.arff", text), ["y"])


def test_arff_unknown_label_name(tmp_path):
    with pytest.raises(ConfigError):
        load_arff(_write(tmp_path / "d.arff", DENSE), ["nope"])


def test_arff_missing_value(tmp_path):
    with pytest.raises(ParseError):
        load_arff(_write(tmp_path / "d.arff", DENSE.replace("3,4,0", "?,4,0")), ["lab"])


def test_label_xml(tmp_path):
    xml = ('<?xml version="1.0"?>\n<labels xmlns="http://mulan.sourceforge.net/labels">'
           '<label name="x"></label><label name="y"></label></labels>\n')
    assert read_label_xml(_write(tmp_path / "l.xml", xml)) == ["x", "y"]


# -- standardization ---------------------------------------------------------------------


def test_standardize_single_instance():
    ds = MultiLabelDataset(np.array([[3.0], [-2.0]]), np.array([[1]]))
    st_ = fit_standardizer(ds)
    np.testing.assert_array_equal(st_.scale, [1, 1])
    np.testing.assert_array_equal(st_.mean, [3, -2])
    np.testing.assert_array_equal(apply_standardizer(ds, st_).X, 0.0)


def test_standardize_two_points():
    # features {0, 2}: mean 1, population std 1
    ds = MultiLabelDataset(np.array([[0.0, 2.0]]), np.array([[1, 0]]))
    st_ = fit_standardizer(ds)
    assert st_.mean[0] == 1.0 and st_.scale[0] == 1.0


def test_standardize_affine_and_constant():
    ds = MultiLabelDataset(np.array([[0.1, 0.1, 0.1], [1.0, 5.0, 9.0]]), np.array([[1, 0, 1]]))
    st_ = fit_standardizer(ds)
    assert st_.scale[0] == 1.0
    z = apply_standardizer(ds, st_).X
    assert np.abs(z.mean(axis=1)).max() <= 1e-10
    assert abs(z[1].std() - 1.0) <= 1e-10


def test_standardize_dimension_mismatch(small_ds):
    st_ = fit_standardizer(small_ds)
    other = MultiLabelDataset(np.zeros((2, 3)), np.ones((1, 3)))
    with pytest.raises(DimensionError):
        apply_standardizer(other, st_)


def test_standardize_uses_train_stats(rng):
    tr = MultiLabelDataset(rng.normal(size=(3, 50)), np.ones((1, 50)))
    te = MultiLabelDataset(rng.normal(5.0, 3.0, size=(3, 20)), np.ones((1, 20)))
    a = apply_standardizer(te, fit_standardizer(tr)).X
    b = apply_standardizer(te, fit_standardizer(te)).X
    assert not np.allclose(a, b)

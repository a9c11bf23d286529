import numpy as np
import pytest

from ldpnb.dataio import CsvHints, fit_ranges, load_csv, normalize, normalize_value, split
from ldpnb.errors import DegenerateColumnError, EmptyInputError, ParseError, SchemaError

from oracles import data_file


def test_fixture_schema(mortgage_csv):
    schema, data = load_csv(mortgage_csv)
    assert schema.n == 3 and schema.k == 2 and len(data) == 10
    assert schema.classes == ("Yes", "No")
    assert schema.columns[0].categories == ("Young", "Medium", "Old")
    assert data.X[0].tolist() == [1, 1, 1] and data.y[0] == 1


def test_category_roundtrip(mortgage_csv):
    schema, _ = load_csv(mortgage_csv)
    for col in schema.columns:
        for idx in range(1, col.n_values + 1):
            assert col.index_of(col.value_of(idx)) == idx
    assert schema.columns[0].index_of("Ancient") == 0


def test_records(mortgage_csv):
    _, data = load_csv(mortgage_csv)
    first = next(data.records())
    assert first.values == (1, 1, 1) and first.label == 1


def test_car_counts():
    schema, data = load_csv(data_file("car"), CsvHints(class_column="class"))
    assert (len(data), schema.n, schema.k) == (1728, 6, 4)


def test_mushroom_counts():
    # the available copy already has the rows with missing values removed
    schema, data = load_csv(data_file("mushroom"), CsvHints(class_column="class"))
    assert (schema.n, schema.k) == (22, 2)
    assert len(data) == 5644


def test_continuous_columns():
    schema, data = load_csv(data_file("diabetes"), CsvHints(class_column="class", continuous="all"))
    assert schema.all_continuous and (len(data), schema.n, schema.k) == (768, 8, 2)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ParseError):
        load_csv(p)


def test_ragged_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,class\n1,2,x\n1,x\n")
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.line == 3


def test_unknown_class_with_fixed_list(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("a,class\n1,x\n2,z\n")
    with pytest.raises(SchemaError):
        load_csv(p, CsvHints(classes=["x", "y"]))


def test_missing_rows_dropped(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b,class\n1,?,x\n2,3,y\n")
    _, data = load_csv(p, CsvHints(continuous="all"))
    assert len(data) == 1


def test_non_numeric_continuous(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("a,class\nfoo,x\n")
    with pytest.raises(ParseError):
        load_csv(p, CsvHints(continuous=["a"]))


def test_headerless_with_positional_class(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x;1;a\ny;2;b\n")
    schema, data = load_csv(p, CsvHints(class_column=0, delimiter=";", header=False, continuous=[1]))
    assert schema.classes == ("x", "y") and data.X[:, 0].tolist() == [1.0, 2.0]


def test_split_sizes_and_determinism(mortgage_csv):
    _, data = load_csv(mortgage_csv)
    a, b = split(data, 0.8, np.random.default_rng(1))
    assert (len(a), len(b)) == (8, 2)
    c, _ = split(data, 0.8, np.random.default_rng(1))
    assert np.array_equal(a.X, c.X) and np.array_equal(a.y, c.y)
    with pytest.raises(EmptyInputError):
        split(data.subset([0]), 0.8, np.random.default_rng(1))


def test_normalize_examples():
    assert normalize_value(5, 0, 10) == 0.0
    assert normalize_value(0, 0, 10) == -1.0
    assert normalize_value(10, 0, 10) == 1.0
    assert normalize_value(12, 0, 10) == 1.0
    with pytest.raises(DegenerateColumnError):
        normalize_value(1, 2, 2)


def test_fit_ranges_and_normalize(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b,class\n0,1,x\n10,1,y\n5,1,x\n")
    _, data = load_csv(p, CsvHints(continuous="all"))
    with pytest.raises(DegenerateColumnError):
        fit_ranges(data)
    ranged = fit_ranges(data.subset([0, 1]).with_features(data.X[:2, :1], data.schema.columns[:1]))
    out = normalize(data.with_features(data.X[:, :1], data.schema.columns[:1]), ranged)
    assert out.X[:, 0].tolist() == [-1.0, 1.0, 0.0]

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from causalest.dataset import (ColumnSpec, ObservationTable, arm_counts, infer_kind, load_csv,
                               one_hot, write_csv)
from causalest.errors import ConfigError, DataError

from conftest import DATA_DIR

TEN_ROWS = DATA_DIR / "ten_rows.csv"


def _write(tmp_path, frame, name="d.csv"):
    path = tmp_path / name
    frame.to_csv(path, index=False)
    return path


class TestColumnSpec:
    def test_distinct_names_required(self):
        with pytest.raises(ConfigError, match="repeated"):
            ColumnSpec("Y", "A", ("C", "Y"))

    def test_empty_confounders_allowed(self):
        spec = ColumnSpec("Y", "A")
        assert spec.confounder_names == ()
        assert spec.columns == ["Y", "A"]


class TestLoadCsv:
    def test_ten_rows_counts(self):
        table = load_csv(TEN_ROWS, ColumnSpec("Y", "A", ("C",)))
        assert table.n == 10
        assert arm_counts(table) == (6, 4)
        assert table.kinds == ("binary",)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_csv(tmp_path / "nope.csv", ColumnSpec("Y", "A"))

    def test_missing_column(self):
        with pytest.raises(ConfigError, match="gender"):
            load_csv(TEN_ROWS, ColumnSpec("Y", "A", ("gender",)))

    def test_non_binary_treatment_names_row_and_column(self, tmp_path):
        frame = pd.read_csv(TEN_ROWS)
        frame.loc[3, "A"] = 2
        with pytest.raises(DataError, match=r"'A'.*row 4"):
            load_csv(_write(tmp_path, frame), ColumnSpec("Y", "A", ("C",)))

    def test_non_binary_outcome(self, tmp_path):
        frame = pd.read_csv(TEN_ROWS).astype({"Y": float})
        frame.loc[0, "Y"] = 0.5
        with pytest.raises(DataError, match="'Y'"):
            load_csv(_write(tmp_path, frame), ColumnSpec("Y", "A", ("C",)))

    def test_empty_arm(self, tmp_path):
        frame = pd.read_csv(TEN_ROWS).assign(A=1)
        with pytest.raises(DataError, match="empty arm"):
            load_csv(_write(tmp_path, frame), ColumnSpec("Y", "A", ("C",)))

    def test_non_numeric(self, tmp_path):
        frame = pd.read_csv(TEN_ROWS).astype({"C": object})
        frame.loc[2, "C"] = "male"
        with pytest.raises(DataError, match="not numeric"):
            load_csv(_write(tmp_path, frame), ColumnSpec("Y", "A", ("C",)))

    def test_missing_values_fail_by_default(self, tmp_path):
        frame = pd.read_csv(TEN_ROWS).astype({"C": float})
        frame.loc[5, "C"] = np.nan
        path = _write(tmp_path, frame)
        with pytest.raises(DataError, match="missing"):
            load_csv(path, ColumnSpec("Y", "A", ("C",)))
        table = load_csv(path, ColumnSpec("Y", "A", ("C",)), missing_policy="drop_rows")
        assert table.n == 9
        assert table.dropped_rows == 1

    def test_bad_policy(self):
        with pytest.raises(ConfigError):
            load_csv(TEN_ROWS, ColumnSpec("Y", "A"), missing_policy="impute")

    def test_five_confounders(self, tmp_path, rng):
        n = 50
        frame = pd.DataFrame({
            "death": rng.integers(0, 2, n), "rhc": np.r_[0, 1, rng.integers(0, 2, n - 2)],
            "gender": rng.integers(0, 2, n), "age": rng.normal(60, 10, n),
            "edu": rng.normal(12, 3, n), "race": rng.integers(0, 3, n),
            "carcinoma": rng.integers(0, 3, n),
        })
        spec = ColumnSpec("death", "rhc", ("gender", "age", "edu", "race", "carcinoma"))
        table = load_csv(_write(tmp_path, frame), spec)
        assert table.p == 5
        assert table.kinds == ("binary", "continuous", "continuous", "categorical", "categorical")

    def test_one_hot(self, tmp_path, rng):
        frame = pd.DataFrame({"Y": [0, 1, 0, 1, 1, 0], "A": [0, 0, 1, 1, 0, 1],
                              "race": [0, 1, 2, 0, 1, 2]})
        table = load_csv(_write(tmp_path, frame), ColumnSpec("Y", "A", ("race",)),
                         one_hot_columns=("race",))
        assert table.confounder_names == ("race=1", "race=2")
        np.testing.assert_array_equal(table.w[:, 1], [0, 0, 1, 0, 0, 1])


class TestObservationTable:
    def test_immutable(self, logit_table):
        with pytest.raises(ValueError):
            logit_table.y[0] = 5

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            ObservationTable.from_arrays([1], [1])

    def test_bounded_outcome(self):
        t = ObservationTable.from_arrays([0.2, 0.9, 0.4], [1, 0, 1], outcome_type="bounded")
        assert t.n == 3
        with pytest.raises(DataError):
            ObservationTable.from_arrays([0.2, 0.9, 0.4], [1, 0, 1])

    def test_take_keeps_kinds(self, logit_table):
        sub = logit_table.take(np.arange(10))
        assert sub.kinds == logit_table.kinds
        assert sub.n == 10

    def test_take_rejects_empty_arm(self, logit_table):
        rows = np.flatnonzero(logit_table.a == 1)
        with pytest.raises(DataError):
            logit_table.take(rows)

    def test_select(self, logit_table):
        sub = logit_table.select(["w2"])
        np.testing.assert_array_equal(sub.w[:, 0], logit_table.w[:, 1])
        with pytest.raises(ConfigError):
            logit_table.select(["zz"])


def test_infer_kind():
    assert infer_kind(np.array([0, 1, 1.0])) == "binary"
    assert infer_kind(np.array([0, 1, 3.0])) == "categorical"
    assert infer_kind(np.array([0.5, 1.0])) == "continuous"


def test_one_hot_drops_lowest_level():
    out, created = one_hot(pd.DataFrame({"x": [3, 1, 2]}), ["x"])
    assert created == ["x=2", "x=3"]
    assert out["x=3"].tolist() == [1, 0, 0]


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(min_value=4, max_value=60))
def test_csv_round_trip(tmp_path_factory, seed, n):
    rng = np.random.default_rng(seed)
    a = np.r_[0, 1, rng.integers(0, 2, n - 2)]
    w = np.column_stack([rng.integers(0, 4, n), rng.normal(size=n) * 10 ** rng.uniform(-3, 3)])
    table = ObservationTable.from_arrays(rng.integers(0, 2, n), a, w, ["k", "x"])
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_csv(table, path)
    back = load_csv(path, table.spec)
    np.testing.assert_array_equal(back.y, table.y)
    np.testing.assert_array_equal(back.a, table.a)
    np.testing.assert_array_equal(back.w[:, 0], table.w[:, 0])
    np.testing.assert_allclose(back.w[:, 1], table.w[:, 1], rtol=1e-12, atol=0)
    assert sum(arm_counts(back)) == back.n

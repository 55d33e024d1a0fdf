import numpy as np
import pytest

from stabaudit.data import (BinaryTreatmentView, Dataset, DiDPanel, SubsetMask, binary_view,
                            did_adjugate, did_covariance, did_design, did_view, is_did_csv, load_csv,
                            load_did_csv, synth_2d, synth_4d, write_csv, write_did_csv)
from stabaudit.exceptions import EmptyGroup, MissingColumn, NotBinaryTreatment, ParseError
from stabaudit.linalg import ols_fit

from conftest import random_did


class TestDataset:
    def test_immutable(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((4, 2)), rng.standard_normal(4))
        with pytest.raises(ValueError):
            ds.X[0, 0] = 1.0

    def test_intercept_appended_last(self):
        ds = Dataset.from_arrays([[1.0], [2.0]], [0.0, 1.0], 0, ["t"], intercept=True)
        assert ds.column_names == ("t", "intercept")
        np.testing.assert_array_equal(ds.X[:, 1], 1.0)

    def test_double_intercept_rejected(self):
        with pytest.raises(ValueError):
            Dataset.from_arrays([[1.0], [1.0]], [0.0, 1.0], intercept=True)

    def test_target_range(self):
        with pytest.raises(ValueError):
            Dataset.from_arrays([[1.0], [2.0]], [0.0, 1.0], target=1)

    def test_more_columns_than_rows_allowed(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((2, 5)), rng.standard_normal(2))
        assert ds.n == 2 and ds.d == 5

    def test_orientation(self):
        ds = Dataset.from_arrays([[0.0], [1.0]], [1.0, 0.0], intercept=True)
        assert ds.orientation == -1
        assert ds.oriented().beta_full[0] > 0


class TestSubsetMask:
    def test_sorted(self):
        assert SubsetMask((3, 1)).removed == (1, 3)

    def test_duplicates(self):
        with pytest.raises(ValueError):
            SubsetMask((1, 1))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            SubsetMask((5,)).keep(3)

    def test_keep(self):
        np.testing.assert_array_equal(SubsetMask((0, 2)).keep(3), [False, True, False])


class TestCSV:
    def test_load_with_intercept(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("t,y\n0,1.5\n1,2\n1,3e0\n")
        ds = load_csv(p, "t", "y", intercept=True)
        assert (ds.n, ds.d) == (3, 2)
        assert ds.target == 0 and ds.target_name == "t"

    def test_na_cell(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("t,y\n0,1\n1,NA\n")
        with pytest.raises(ParseError) as err:
            load_csv(p, "t", "y")
        assert err.value.row == 3 and err.value.column == "y"
        assert "NA" in str(err.value)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("t,y\n0,1\n")
        with pytest.raises(MissingColumn):
            load_csv(p, "x", "y")

    def test_round_trip_bit_exact(self, tmp_path, rng):
        X = rng.standard_normal((20, 3)) * 10.0 ** rng.integers(-5, 5, (20, 3))
        ds = Dataset.from_arrays(X, rng.standard_normal(20), 1, ["a", "b", "c"], intercept=True)
        p = tmp_path / "r.csv"
        write_csv(ds, p)
        back = load_csv(p, "b", "y", intercept=True)
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.y, ds.y)
        assert back.target == 1

    def test_target_resolved_before_intercept(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("a,y,b\n1,2,3\n4,5,7\n8,9,1\n")
        ds = load_csv(p, "b", "y", intercept=True)
        assert ds.column_names == ("a", "b", "intercept") and ds.target == 1


class TestSynthetic:
    def test_2d_golden(self):
        ds = synth_2d(100, 0)
        slope = ds.beta_full[0]
        assert -2.5 < slope < -1.5
        assert slope == pytest.approx(-1.944917111743333, abs=1e-9)

    def test_2d_two_points_exact(self):
        ds = synth_2d(2, 11)
        np.testing.assert_allclose(ds.X @ ds.beta_full, ds.y, atol=1e-12)

    def test_deterministic(self):
        a, b = synth_2d(50, 4), synth_2d(50, 4)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        c, e = synth_4d(50, 4), synth_4d(50, 4)
        np.testing.assert_array_equal(c.y, e.y)

    def test_4d_coefficients(self):
        ds = synth_4d(1000, 0)
        assert ds.d == 4 and not ds.has_intercept
        assert np.all((ds.beta_full > 0.85) & (ds.beta_full < 1.15))

    def test_4d_uncorrelated(self):
        C = np.corrcoef(synth_4d(1000, 0).X.T)
        assert np.abs(C - np.eye(4)).max() < 0.15

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            synth_2d(1, 0)
        with pytest.raises(ValueError):
            synth_4d(3, 0)


class TestBinaryView:
    def test_split(self):
        ds = Dataset.from_arrays([[0.0], [0.0], [1.0], [1.0]], [1.0, 2.0, 3.0, 4.0], intercept=True)
        v = binary_view(ds)
        np.testing.assert_array_equal(v.y0, [1, 2])
        np.testing.assert_array_equal(v.y1, [3, 4])
        assert v.orientation == 1

    def test_negated_response_flips_orientation(self):
        t = np.array([0.0, 0.0, 1.0, 1.0])
        y = np.array([1.0, 2.0, 3.0, 4.0])
        a = BinaryTreatmentView.from_arrays(t, y)
        b = BinaryTreatmentView.from_arrays(t, -y)
        assert (a.orientation, b.orientation) == (1, -1)
        # After orientation both views describe the same positive effect.
        np.testing.assert_array_equal(b.y1 - b.y0.mean(), a.y1 - a.y0.mean())

    def test_intercept_first(self):
        ds = Dataset(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 1.0]]), np.array([0.0, 1.0, 2.0]),
                     ("c", "t"), 1, has_intercept=True)
        v = binary_view(ds)
        np.testing.assert_array_equal(v.y1, [1.0, 2.0])

    def test_non_binary(self):
        ds = Dataset.from_arrays([[0.0], [0.5], [1.0]], [1.0, 2.0, 3.0], intercept=True)
        with pytest.raises(NotBinaryTreatment):
            binary_view(ds)

    def test_empty_group(self):
        with pytest.raises(EmptyGroup):
            BinaryTreatmentView.from_arrays([1.0, 1.0], [1.0, 2.0])

    def test_wrong_shape(self, rng):
        with pytest.raises(NotBinaryTreatment):
            binary_view(Dataset.from_arrays(rng.standard_normal((5, 3)), rng.standard_normal(5)))

    def test_lossless(self, rng):
        for _ in range(20):
            t = (rng.random(10) < 0.5).astype(float)
            t[:2] = [0, 1]
            y = rng.standard_normal(10)
            v = BinaryTreatmentView.from_arrays(t, y)
            ds = v.to_dataset()
            np.testing.assert_array_equal(ds.y, y)
            assert ds.orientation == v.orientation


class TestDiD:
    def test_example(self):
        v = did_view([0.0, 0.0], [1.0, 0.0], [0])
        np.testing.assert_array_equal(v.deltas_treated, [1.0])
        np.testing.assert_array_equal(v.deltas_control, [0.0])
        assert v.orientation == 1

    def test_equal_deltas_zero_interaction(self):
        X, y = did_design([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], [0])
        assert abs(ols_fit(X, y)[3]) < 1e-12

    def test_all_treated(self):
        with pytest.raises(EmptyGroup):
            did_view([0.0, 0.0], [1.0, 1.0], [0, 1])

    def test_bool_mask(self):
        v = did_view([0.0, 0.0, 0.0], [1.0, 0.0, 2.0], np.array([True, False, True]))
        np.testing.assert_array_equal(v.ids_treated, [0, 2])

    def test_negative_orientation(self):
        v = did_view([0.0, 0.0], [-1.0, 0.0], [0])
        assert v.orientation == -1
        np.testing.assert_array_equal(v.deltas_treated, [1.0])

    def test_interaction_sign_matches_mean_gap(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            N = int(rng.integers(2, 13))
            before, after, treated = random_did(rng, N)
            X, y = did_design(before, after, treated)
            b3 = ols_fit(X, y)[3]
            delta = after - before
            gap = delta[treated].mean() - delta.mean()
            if abs(gap) > 1e-9:
                assert np.sign(b3) == np.sign(gap)

    def test_covariance_closed_form(self):
        for N in range(2, 11):
            for T in range(1, N):
                treated = np.arange(N) < T
                X, _ = did_design(np.zeros(N), np.zeros(N), treated)
                np.testing.assert_array_equal(X.T @ X, did_covariance(2 * N, 2 * T))

    def test_adjugate(self):
        for N in range(2, 9):
            for T in range(1, N):
                S = did_covariance(2 * N, 2 * T)
                np.testing.assert_allclose(did_adjugate(2 * N, 2 * T), np.linalg.det(S) * np.linalg.inv(S),
                                           rtol=1e-9, atol=1e-9)

    def test_adjugate_row_gives_sign(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            N = int(rng.integers(2, 13))
            before, after, treated = random_did(rng, N)
            X, y = did_design(before, after, treated)
            adj = did_adjugate(2 * N, 2 * treated.sum())
            closed = adj[3] @ (X.T @ y)
            direct = ols_fit(X, y)[3]
            if abs(direct) > 1e-9:
                assert np.sign(closed) == np.sign(direct)

    def test_csv_round_trip(self, tmp_path):
        panel = DiDPanel(("a", "b", "c"), np.array([0.1, 0.2, 0.3]), np.array([1.0, 2.0, 3.5]),
                         np.array([1.0, 0.0, 0.0]))
        p = tmp_path / "did.csv"
        write_did_csv(panel, p)
        assert is_did_csv(p)
        back = load_did_csv(p)
        assert back.ids == panel.ids
        np.testing.assert_array_equal(back.after, panel.after)
        assert back.view().N == 3

    def test_csv_bad_treated(self, tmp_path):
        p = tmp_path / "did.csv"
        p.write_text("id,before,after,treated\na,0,1,2\n")
        with pytest.raises(NotBinaryTreatment):
            load_did_csv(p)

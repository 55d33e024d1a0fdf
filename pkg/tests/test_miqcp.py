import itertools
from pathlib import Path

import numpy as np
import pytest

from stabaudit.certificates import NoFlipFound, NoFlipWithin, StabilityCertificate, is_flipped
from stabaudit.data import Dataset
from stabaudit.influence import greedy_resolve_upper_bound
from stabaudit.miqcp import (BnBNode, branch_and_bound, build_model, default_beta_box, envelope,
                             export_mps, mccormick_relax, read_mps, round_and_verify, solve_lp)
from stabaudit.miqcp.mps import format_number, mps_text
from stabaudit.oracle import brute_force_stability

from conftest import random_regression

DATA = Path(__file__).parent / "data"


def toy():
    return Dataset.from_arrays([[0.0], [1.0], [1.0]], [0.0, 2.0, 1.5], intercept=True)


def small_instance(seed, n=7, d=2):
    rng = np.random.default_rng(seed)
    X = np.c_[rng.standard_normal((n, d - 1)), np.ones(n)]
    y = 0.6 * X[:, 0] + rng.standard_normal(n)
    return Dataset.from_arrays(X, y, 0)


class TestModel:
    def test_structure(self):
        ds = Dataset.from_arrays([[0.0], [1.0]], [0.0, 1.0], intercept=True)
        m = build_model(ds, "integral")
        assert (m.n, m.d, m.p) == (2, 2, 2)
        assert m.stationarity_matrix().shape == (2, m.n_vars)
        assert [name for name, _, _ in m.linear_rows()] == ["SIGN"]

    def test_fractional_drops_last_coefficient(self):
        m = build_model(toy(), "fractional")
        A = m.stationarity_matrix()
        assert m.p == m.d - 1
        assert np.all(A[:, m.beta_index(m.d - 1)] == 0.0)
        lo, hi = m.beta_bounds()
        assert lo[-1] == hi[-1] == 0.0
        assert m.linear_rows() == []

    def test_target_permuted_last_and_oriented(self):
        ds = Dataset.from_arrays([[0.0, 1.0], [1.0, 2.0], [2.0, 0.0], [3.0, 1.0]], [3.0, 1.0, 2.0, -1.0], 0)
        m = build_model(ds, "integral")
        np.testing.assert_array_equal(m.X[:, -1], ds.X[:, 0])
        assert m.orientation == ds.orientation == -1
        np.testing.assert_allclose(m.to_source_beta(np.linalg.lstsq(m.X, m.y, rcond=None)[0]),
                                   ds.beta_full, atol=1e-12)

    def test_stationarity_zero_at_full_fit(self, rng):
        ds = random_regression(rng, 12, 3)
        m = build_model(ds, "integral")
        beta = np.linalg.lstsq(m.X, m.y, rcond=None)[0]
        np.testing.assert_allclose(m.residual(np.ones(12), beta), 0.0, atol=1e-10)

    def test_default_box(self):
        ds = toy()
        assert default_beta_box(ds) == 1e3 * max(1.0, np.abs(ds.beta_full).max())

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            build_model(toy(), "mixed")


class TestEnvelope:
    def test_degenerate_interval(self):
        lo, hi = envelope(0.0, 0.0, -3.0, 2.0, 0.0, 1.5)
        assert lo == 0.0 and hi == 0.0

    def test_midpoint(self):
        lo, hi = envelope(0.0, 1.0, -1.0, 1.0, 0.5, 0.5)
        assert lo <= 0.25 <= hi
        # Evaluating the four planes at (1/2, 1/2) gives the interval [0, 1/2].
        assert (lo, hi) == (0.0, 0.5)

    def test_contains_product(self, rng):
        for _ in range(200):
            xl, yl = rng.uniform(-2, 1, 2)
            xu, yu = xl + rng.uniform(0, 2), yl + rng.uniform(0, 2)
            x, y = rng.uniform(xl, xu), rng.uniform(yl, yu)
            lo, hi = envelope(xl, xu, yl, yu, x, y)
            assert lo - 1e-12 <= x * y <= hi + 1e-12

    def test_relaxation_sound_against_grid(self):
        rng = np.random.default_rng(14)
        for _ in range(15):
            x = rng.standard_normal(3)
            ds = Dataset.from_arrays(x[:, None], x + 0.3 * rng.standard_normal(3))
            m = build_model(ds, "integral", B=5.0)
            node = BnBNode.root(m)
            node.beta_lo[:] = -rng.uniform(0.0, 3.0)
            node.w_hi[:] = rng.uniform(0.3, 1.0, 3)
            res = solve_lp(mccormick_relax(node, m), "highs")
            assert res.optimal
            grid = np.linspace(0, 1, 21)
            best = 0.0
            for w in itertools.product(grid, repeat=3):
                w = np.minimum(np.array(w), node.w_hi)
                den = np.sum(w * x * x)
                if den <= 1e-12:
                    continue
                b = np.sum(w * x * m.y) / den
                if node.beta_lo[0] <= b <= 0.0:
                    best = max(best, w.sum())
            assert res.value >= best - 1e-7

    def test_dense_and_sparse_agree(self, rng):
        ds = random_regression(rng, 6, 2)
        m = build_model(ds, "integral")
        node = BnBNode.root(m)
        a = solve_lp(mccormick_relax(node, m, dense=True), "highs")
        b = solve_lp(mccormick_relax(node, m, dense=False), "highs")
        assert a.value == pytest.approx(b.value, abs=1e-8)


class TestRoundAndVerify:
    def test_all_ones(self):
        assert isinstance(round_and_verify(toy(), np.ones(3)), NoFlipFound)

    def test_oracle_indicator(self):
        for seed in range(10):
            ds = small_instance(seed)
            res = brute_force_stability(ds, ds.n, return_set=True)
            if isinstance(res, NoFlipWithin):
                continue
            k, removed = res
            cert = round_and_verify(ds, ds.keep_mask(removed).astype(float))
            assert isinstance(cert, StabilityCertificate) and cert.value == k and cert.verified

    def test_tolerance_boundary(self):
        ds = small_instance(3)
        k, removed = brute_force_stability(ds, ds.n, return_set=True)
        w = ds.keep_mask(removed).astype(float)
        w[w == 1.0] = 1.0 - 1e-9
        assert round_and_verify(ds, w).value == k

    def test_validation(self):
        with pytest.raises(ValueError):
            round_and_verify(toy(), np.ones(2))
        with pytest.raises(ValueError):
            round_and_verify(toy(), np.array([1.0, 1.5, 1.0]))


class TestBranchAndBound:
    @pytest.mark.parametrize("seed", range(8))
    def test_integral_matches_oracle(self, seed):
        ds = small_instance(seed, n=int(6 + seed % 3))
        truth = brute_force_stability(ds, ds.n)
        res = branch_and_bound(build_model(ds, "integral"), time_limit=60)
        assert res.solved
        if isinstance(truth, NoFlipWithin):
            assert res.certificate is None
        else:
            assert res.lower_bound == truth
            assert res.certificate.value == truth and is_flipped(ds, res.certificate.removed)

    def test_dual_bound_monotone(self):
        res = branch_and_bound(build_model(small_instance(1, n=9), "integral"), time_limit=60)
        duals = [h[2] for h in res.history]
        assert all(b <= a + 1e-12 for a, b in zip(duals, duals[1:]))
        incs = [h[3] for h in res.history if h[3] is not None]
        assert all(b >= a for a, b in zip(incs, incs[1:]))

    def test_fractional_dominates_integral(self):
        for seed in range(6):
            ds = small_instance(seed)
            frac = branch_and_bound(build_model(ds, "fractional"), time_limit=60)
            integ = branch_and_bound(build_model(ds, "integral"), time_limit=60)
            assert frac.dual_bound >= integ.dual_bound - 1e-6
            assert frac.lower_bound <= integ.lower_bound

    def test_safeguard_keeps_optimum(self):
        ds = small_instance(2)
        plain = branch_and_bound(build_model(ds, "integral"), time_limit=60)
        safe = branch_and_bound(build_model(ds, "integral", safeguard=True), time_limit=60)
        assert plain.incumbent_value >= 1
        assert safe.lower_bound == plain.lower_bound

    def test_warm_start_never_worse(self):
        for seed in range(5):
            ds = small_instance(seed, n=10)
            g = greedy_resolve_upper_bound(ds)
            if not isinstance(g, StabilityCertificate):
                continue
            res = branch_and_bound(build_model(ds, "integral"), node_limit=0, warm_start=g.removed)
            assert res.certificate.value <= g.value

    def test_limits_keep_valid_bounds(self):
        ds = small_instance(5, n=12)
        truth = brute_force_stability(ds, ds.n)
        res = branch_and_bound(build_model(ds, "integral"), node_limit=2)
        assert res.status == "node_limit"
        assert res.lower_bound <= truth
        assert "stopped early (node_limit)" in res.qualifiers()

    def test_lower_certificate(self):
        res = branch_and_bound(build_model(small_instance(0), "fractional"), time_limit=60)
        cert = res.lower_certificate("miqcp-frac")
        assert cert.bound_type == "lower" and cert.value == res.lower_bound
        assert "fractional relaxation" in cert.qualifiers
        assert any(q.startswith("valid within |beta|_inf <=") for q in cert.qualifiers)

    def test_internal_and_highs_lp_agree(self):
        ds = small_instance(4)
        a = branch_and_bound(build_model(ds, "integral"), time_limit=60, lp_solver="simplex")
        b = branch_and_bound(build_model(ds, "integral"), time_limit=60, lp_solver="highs")
        assert a.lower_bound == b.lower_bound


class TestMPS:
    @pytest.mark.parametrize("mode,safe,golden", [("integral", False, "tiny_integral.mps"),
                                                  ("fractional", True, "tiny_fractional_safe.mps")])
    def test_golden(self, tmp_path, mode, safe, golden):
        out = export_mps(build_model(toy(), mode, B=10.0, safeguard=safe), tmp_path / "m.mps")
        assert out.read_bytes() == (DATA / golden).read_bytes()

    def test_deterministic(self, tmp_path, rng):
        ds = random_regression(rng, 15, 3)
        a = export_mps(build_model(ds, "integral"), tmp_path / "a.mps").read_bytes()
        b = export_mps(build_model(ds, "integral"), tmp_path / "b.mps").read_bytes()
        assert a == b

    def test_parse_back(self, tmp_path, rng):
        ds = random_regression(rng, 9, 3)
        for mode in ("integral", "fractional"):
            m = build_model(ds, mode, safeguard=True)
            parsed = read_mps(export_mps(m, tmp_path / f"{mode}.mps"))
            assert parsed["sense"] == "MAX"
            assert len(parsed["columns"]) == m.n + m.d
            constraints = [r for r, t in parsed["rows"].items() if t != "N"]
            assert len(constraints) == m.d + len(m.linear_rows())
            assert len(parsed["integer"]) == (m.n if mode == "integral" else 0)
            assert set(parsed["qcmatrix"]) == {f"STAT{k:04d}" for k in range(m.d)}
            _, Cz = m.stationarity()
            for k in range(m.d):
                q = parsed["qcmatrix"][f"STAT{k:04d}"]
                assert len(q) == 2 * np.count_nonzero(Cz[k])

    def test_fixed_columns(self):
        for line in mps_text(build_model(toy(), "integral", B=10.0)).splitlines():
            assert len(line) <= 61

    @pytest.mark.parametrize("x", [0.0, 1.0, -2.0, 1 / 3, -1e-20, 123456789.123, 6.02e23])
    def test_format_number(self, x):
        s = format_number(x)
        assert len(s) <= 12
        assert float(s) == pytest.approx(x, rel=1e-6)

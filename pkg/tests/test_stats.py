import numpy as np
import pytest

import oracles
from fca import FeatureMap, PatchConfig, SortedReference
from fca import fca_score, histogram_score, moments_score, noncompliance, sww_score
from fca.errors import InvalidParameter
from fca import backend


def fmap(arr):
    return FeatureMap(np.asarray(arr, dtype=float))


def cfg3(**kw):
    return PatchConfig(patch_size=3, **kw)


class TestPatchConfig:
    def test_rejects_even_patch(self):
        with pytest.raises(InvalidParameter):
            PatchConfig(patch_size=4)

    def test_rejects_bad_sigmas_and_bins(self):
        with pytest.raises(InvalidParameter):
            PatchConfig(sigma_w=0.0)
        with pytest.raises(InvalidParameter):
            PatchConfig(sigma_p=-1.0)
        with pytest.raises(InvalidParameter):
            PatchConfig(sigma_s=-0.1)
        with pytest.raises(InvalidParameter):
            PatchConfig(histogram_bins=1)

    def test_sigma_s_zero_allowed(self):
        assert PatchConfig(sigma_s=0.0).sigma_s == 0.0


class TestNoncompliance:
    def test_identical_multisets_give_zero(self):
        fm = fmap(np.array([[3.0, 1.0, 2.0]]).reshape(1, 3, 1))
        cfg = PatchConfig(patch_size=1)
        # use a 3x3 map so a 3-sample patch exists: lay out [3,1,2] in a 1x3 row is
        # not a square patch; use 3x3 with T=3 instead
        data = np.array([[3, 1, 2], [2, 3, 1], [1, 2, 3]], dtype=float)
        ref = SortedReference(np.sort(data.reshape(1, -1)))
        m = noncompliance(fmap(data), (1, 1), ref, cfg3())
        assert np.all(m.values == 0.0)

    def test_outlier_pixel_receives_the_error(self):
        # patch samples [5,1,2,...] against a reference missing the 5: the
        # pixel holding the top-rank sample takes the whole difference
        data = np.array([[5, 1, 2], [1, 2, 1], [2, 1, 2]], dtype=float)
        ref_vals = np.sort(np.array([1, 2, 3, 1, 2, 1, 2, 1, 2], dtype=float))
        m = noncompliance(fmap(data), (1, 1), SortedReference(ref_vals[None, :]), cfg3())
        assert m.values[0, 0] == pytest.approx(2.0)
        assert m.values.sum() == pytest.approx(
            oracles.wasserstein_sorted(data.reshape(-1), ref_vals))

    def test_channels_add(self, rng):
        data = rng.random((3, 3, 2))
        ref = SortedReference(np.sort(data.reshape(-1, 2).T, axis=1))
        both = noncompliance(fmap(data), (1, 1), ref, cfg3())
        single0 = noncompliance(fmap(data[:, :, :1]), (1, 1),
                                SortedReference(ref.values[:1]), cfg3())
        single1 = noncompliance(fmap(data[:, :, 1:]), (1, 1),
                                SortedReference(ref.values[1:]), cfg3())
        assert np.allclose(both.values, single0.values + single1.values, atol=1e-12)

    def test_out_of_bounds_patch_rejected(self, rng):
        data = rng.random((4, 4, 1))
        ref = SortedReference(np.sort(rng.random((1, 9)), axis=1))
        with pytest.raises(InvalidParameter):
            noncompliance(fmap(data), (0, 1), ref, cfg3())

    def test_per_channel_sum_is_wasserstein(self, rng):
        # spec invariant: the map total per channel equals the exact distance
        for t in (1, 3, 5):
            cfg = PatchConfig(patch_size=t)
            for c in (1, 2, 4):
                data = rng.random((t, t, c))
                ref_vals = np.sort(rng.random((c, t * t)), axis=1)
                m = noncompliance(fmap(data), (t // 2, t // 2),
                                  SortedReference(ref_vals), cfg)
                expect = sum(oracles.wasserstein_sorted(data[:, :, ch], ref_vals[ch])
                             for ch in range(c))
                assert m.values.sum() == pytest.approx(expect, rel=1e-9)


class TestMomentsScore:
    def test_constant_equal_to_ref_is_zero(self):
        fm = fmap(np.full((6, 6, 2), 0.4))
        out = moments_score(fm, np.array([0.4, 0.4]), cfg3())
        assert np.allclose(out.scores, 0.0, atol=1e-15)

    def test_constant_offset_is_delta_squared(self):
        fm = fmap(np.full((6, 6, 2), 0.4))
        out = moments_score(fm, np.array([0.4 - 0.3, 0.4]), cfg3())
        assert np.allclose(out.scores, 0.09, atol=1e-12)

    def test_matches_loop_oracle(self, rng):
        data = rng.random((8, 8, 2))
        ref = rng.random(2)
        out = moments_score(fmap(data), ref, cfg3())
        expect = oracles.moments_map(data, ref, 3)
        assert np.allclose(out.scores[1:-1, 1:-1], expect, atol=1e-9)

    def test_border_replicates_nearest_center(self, rng):
        data = rng.random((6, 6, 1))
        out = moments_score(fmap(data), np.array([0.5]), cfg3())
        assert out.scores[0, 0] == out.scores[1, 1]
        assert out.scores[-1, 3] == out.scores[-2, 3]


class TestHistogramScore:
    def test_matching_histogram_is_zero(self):
        fm = fmap(np.full((5, 5, 1), 0.25))
        ref = np.zeros((1, 10))
        ref[0, 2] = 1.0  # 0.25 falls in bin 2
        out = histogram_score(fm, ref, cfg3())
        assert np.all(out.scores == 0.0)

    def test_opposite_bins_two_bin_case(self):
        fm = fmap(np.full((5, 5, 1), 0.2))  # all mass in bin 0 of 2
        ref = np.array([[0.0, 1.0]])
        out = histogram_score(fm, ref, cfg3(histogram_bins=2))
        assert np.allclose(out.scores, 0.5, atol=1e-12)

    def test_rejects_out_of_range_values(self):
        fm = fmap(np.full((5, 5, 1), 1.5))
        with pytest.raises(InvalidParameter):
            histogram_score(fm, np.ones((1, 10)) / 10, cfg3())

    def test_rejects_unnormalized_reference(self):
        fm = fmap(np.full((5, 5, 1), 0.5))
        with pytest.raises(InvalidParameter):
            histogram_score(fm, np.full((1, 10), 0.3), cfg3())

    def test_matches_exact_transport_on_bin_centers(self, rng):
        # with samples quantized to bin centers, the binned EMD is the exact
        # transport cost between the two weighted atom sets
        b = 8
        data = (rng.integers(0, b, size=(7, 7, 2)) + 0.5) / b
        ref_raw = (rng.integers(0, b, size=(2, 9)) + 0.5) / b
        ref_hist = np.stack([np.bincount((ref_raw[c] * b - 0.5).astype(int),
                                         minlength=b) / 9 for c in range(2)])
        out = histogram_score(fmap(data), ref_hist, cfg3(histogram_bins=b))
        centers_pos = (np.arange(b) + 0.5) / b
        for (i, j) in [(0, 0), (2, 3), (4, 4)]:
            expect = 0.0
            for c in range(2):
                patch = data[i:i + 3, j:j + 3, c].reshape(-1)
                pm = np.bincount((patch * b - 0.5).astype(int), minlength=b) / 9
                expect += oracles.wasserstein_weighted_atoms(
                    centers_pos, pm, centers_pos, ref_hist[c])
            assert out.scores[i + 1, j + 1] == pytest.approx(expect, abs=1e-9)

    def test_matches_loop_oracle(self, rng):
        data = rng.random((8, 8, 2))
        ref = rng.random((2, 10))
        ref /= ref.sum(axis=1, keepdims=True)
        out = histogram_score(fmap(data), ref, cfg3())
        expect = oracles.histogram_emd_map(data, ref, 3, 10)
        assert np.allclose(out.scores[1:-1, 1:-1], expect, atol=1e-9)


def tiled_multiset_map(h, w, t, values, channels=1):
    """Every t x t window holds the same sample multiset (diagonal tiling)."""
    y, x = np.mgrid[0:h, 0:w]
    base = np.asarray(values, dtype=float)[(x + y) % t]
    return np.repeat(base[:, :, None], channels, axis=2)


class TestSwwScore:
    def test_zero_when_every_patch_matches_reference(self):
        data = tiled_multiset_map(9, 9, 3, [0.1, 0.5, 0.9])
        ref = SortedReference(np.sort(np.tile([0.1, 0.5, 0.9], 3))[None, :])
        out = sww_score(fmap(data), ref, cfg3())
        assert np.allclose(out.scores, 0.0, atol=1e-12)

    def test_degenerate_patch_size_one(self, rng):
        data = rng.random((5, 5, 3))
        ref_vals = np.sort(rng.random((3, 1)), axis=1)
        cfg = PatchConfig(patch_size=1)
        out = sww_score(fmap(data), SortedReference(ref_vals), cfg)
        expect = np.abs(data - ref_vals[:, 0]).sum(axis=2)
        assert np.allclose(out.scores, expect, atol=1e-12)

    def test_uniform_weights_give_mean_wasserstein(self, rng):
        data = rng.random((7, 7, 2))
        ref_vals = np.sort(rng.random((2, 9)), axis=1)
        cfg = cfg3(uniform_sww=True)
        out = sww_score(fmap(data), SortedReference(ref_vals), cfg)
        for (i, j) in [(0, 0), (2, 2), (4, 3)]:
            expect = sum(oracles.wasserstein_sorted(data[i:i + 3, j:j + 3, c],
                                                    ref_vals[c]) for c in range(2)) / 9
            assert out.scores[i + 1, j + 1] == pytest.approx(expect, rel=1e-9)

    def test_uniform_weights_match_fine_histogram(self, rng):
        # quantized samples: per-patch mean non-compliance equals the EMD of
        # the patch histogram at matching bin resolution
        b = 16
        data = (rng.integers(0, b, size=(6, 6, 1)) + 0.5) / b
        ref_samples = (rng.integers(0, b, size=9) + 0.5) / b
        ref_vals = np.sort(ref_samples)[None, :]
        ref_hist = np.bincount((ref_samples * b - 0.5).astype(int), minlength=b)[None, :] / 9.0
        sww_out = sww_score(fmap(data), SortedReference(ref_vals),
                            cfg3(uniform_sww=True))
        hist_out = histogram_score(fmap(data), ref_hist, cfg3(histogram_bins=b))
        assert np.allclose(sww_out.scores, hist_out.scores, atol=1e-9)

    def test_matches_loop_oracle(self, rng):
        data = rng.random((9, 9, 2))
        ref_vals = np.sort(rng.random((2, 9)), axis=1)
        out = sww_score(fmap(data), SortedReference(ref_vals), cfg3(sigma_w=1.5))
        expect = oracles.sww_map(data, ref_vals, 3, 1.5)
        assert np.allclose(out.scores[1:-1, 1:-1], expect, atol=1e-9)


class TestFcaScore:
    def test_zero_when_every_patch_matches_reference(self):
        data = tiled_multiset_map(9, 9, 3, [0.2, 0.4, 0.6], channels=2)
        ref = SortedReference(np.tile(np.sort(np.tile([0.2, 0.4, 0.6], 3)), (2, 1)))
        out = fca_score(fmap(data), ref, cfg3())
        assert np.allclose(out.scores, 0.0, atol=1e-12)

    def test_outlier_attains_the_maximum(self):
        data = np.full((16, 16, 1), 0.3)
        data[6, 9, 0] = 0.9
        ref = SortedReference(np.full((1, 9), 0.3))
        out = fca_score(fmap(data), ref, cfg3(sigma_s=0.0))
        assert np.unravel_index(np.argmax(out.scores), out.shape) == (6, 9)
        others = out.scores.copy()
        others[6, 9] = 0.0
        assert np.all(others == 0.0)

    def test_matches_double_loop_no_smoothing(self, rng):
        data = rng.random((12, 12, 2))
        ref_vals = np.sort(rng.random((2, 9)), axis=1)
        out = fca_score(fmap(data), SortedReference(ref_vals), cfg3(sigma_s=0.0))
        expect = oracles.fca_map(data, ref_vals, 3, 3.0, 0.0)
        assert np.allclose(out.scores, expect, atol=1e-9)

    def test_matches_double_loop_with_smoothing(self, rng):
        data = rng.random((12, 12, 2))
        ref_vals = np.sort(rng.random((2, 9)), axis=1)
        out = fca_score(fmap(data), SortedReference(ref_vals), cfg3(sigma_s=1.0))
        expect = oracles.fca_map(data, ref_vals, 3, 3.0, 1.0)
        assert np.allclose(out.scores, expect, atol=1e-9)

    def test_larger_patch_against_loop_oracle(self, rng):
        data = rng.random((11, 10, 1))
        ref_vals = np.sort(rng.random((1, 25)), axis=1)
        cfg = PatchConfig(patch_size=5, sigma_p=2.0, sigma_s=0.7)
        out = fca_score(fmap(data), SortedReference(ref_vals), cfg)
        expect = oracles.fca_map(data, ref_vals, 5, 2.0, 0.7)
        assert np.allclose(out.scores, expect, atol=1e-9)


class TestSharedInvariants:
    @pytest.fixture
    def setup(self, rng):
        data = rng.random((9, 9, 3))
        ref_vals = np.sort(rng.random((3, 9)), axis=1)
        return data, ref_vals

    def test_non_negative_everywhere(self, setup, rng):
        data, ref_vals = setup
        cfg = cfg3()
        ref = SortedReference(ref_vals)
        hist = rng.random((3, 10))
        hist /= hist.sum(axis=1, keepdims=True)
        for out in (moments_score(fmap(data), rng.random(3), cfg),
                    histogram_score(fmap(data), hist, cfg),
                    sww_score(fmap(data), ref, cfg),
                    fca_score(fmap(data), ref, cfg)):
            assert np.all(out.scores >= 0)

    def test_channel_permutation_invariance(self, setup, rng):
        data, ref_vals = setup
        perm = np.array([2, 0, 1])
        cfg = cfg3()
        hist = rng.random((3, 10))
        hist /= hist.sum(axis=1, keepdims=True)
        mean = rng.random(3)
        # per-channel terms are identical; only the cross-channel summation
        # order changes, so agreement is to the last ulp
        assert np.allclose(moments_score(fmap(data), mean, cfg).scores,
                           moments_score(fmap(data[:, :, perm]), mean[perm], cfg).scores,
                           rtol=1e-12)
        assert np.allclose(histogram_score(fmap(data), hist, cfg).scores,
                           histogram_score(fmap(data[:, :, perm]), hist[perm], cfg).scores,
                           rtol=1e-12)
        for fn in (sww_score, fca_score):
            a = fn(fmap(data), SortedReference(ref_vals), cfg).scores
            b = fn(fmap(data[:, :, perm]), SortedReference(ref_vals[perm]), cfg).scores
            assert np.allclose(a, b, atol=1e-12)

    def test_homogeneity(self, setup):
        data, ref_vals = setup
        cfg = cfg3()
        scale = 3.7
        ref = SortedReference(ref_vals)
        ref_s = SortedReference(ref_vals * scale)
        for fn in (sww_score, fca_score):
            base = fn(fmap(data), ref, cfg).scores
            scaled = fn(fmap(data * scale), ref_s, cfg).scores
            assert np.allclose(scaled, scale * base, rtol=1e-9)
        mean = data.mean(axis=(0, 1))
        m_base = moments_score(fmap(data), mean, cfg).scores
        m_scaled = moments_score(fmap(data * scale), mean * scale, cfg).scores
        assert np.allclose(m_scaled, scale ** 2 * m_base, rtol=1e-9)

    def test_degenerate_t_sww_equals_fca(self, rng):
        data = rng.random((6, 7, 2))
        ref_vals = np.sort(rng.random((2, 1)), axis=1)
        cfg = PatchConfig(patch_size=1, sigma_s=0.0)
        a = sww_score(fmap(data), SortedReference(ref_vals), cfg).scores
        b = fca_score(fmap(data), SortedReference(ref_vals), cfg).scores
        assert np.allclose(a, b, atol=1e-12)


class TestBackendAgreement:
    def test_all_kernels_match_across_backends(self, rng):
        f = np.ascontiguousarray(rng.random((10, 11, 2)))
        t = 3
        ref = np.sort(rng.random((2, 9)), axis=1)
        ref_cdf = np.cumsum(np.full((2, 10), 0.1), axis=1)
        w = np.full((3, 3), 1.0 / 9)
        gp = oracles.gauss2d(3.0, 1)
        sm = np.array([0.25, 0.5, 0.25])
        nb = backend.kernels("numba")
        np_ = backend.kernels("numpy")
        assert np.allclose(nb.patch_means(f, t), np_.patch_means(f, t), rtol=1e-12)
        assert np.allclose(nb.hist_emd(f, ref_cdf, t), np_.hist_emd(f, ref_cdf, t), rtol=1e-12)
        assert np.allclose(nb.sww(f, ref, t, w), np_.sww(f, ref, t, w), rtol=1e-12)
        assert np.allclose(nb.fca(f, ref, t, gp, sm), np_.fca(f, ref, t, gp, sm), rtol=1e-9)
        assert np.allclose(nb.fca(f, ref, t, gp, np.empty(0)),
                           np_.fca(f, ref, t, gp, np.empty(0)), rtol=1e-9)
        assert np.allclose(nb.rank_medians(f, t), np_.rank_medians(f, t), rtol=1e-12)

    def test_thread_count_does_not_change_results(self, rng):
        f = np.ascontiguousarray(rng.random((16, 14, 2)))
        ref = np.sort(rng.random((2, 25)), axis=1)
        gp = oracles.gauss2d(2.0, 2)
        sm = np.array([0.25, 0.5, 0.25])
        nb = backend.kernels("numba")
        backend.set_threads(1)
        one = nb.fca(f, ref, 5, gp, sm)
        backend.set_threads(4)
        four = nb.fca(f, ref, 5, gp, sm)
        assert np.allclose(one, four, rtol=1e-12)

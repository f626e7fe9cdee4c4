import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from adiabatic_pdf.analysis import (
    DistSpec, SampleFileError, draw_sample, histogram_truth, kde_bandwidth_search, kde_estimate,
    kl_divergence, mse, read_sample,
)


class TestDistSpec:
    def test_parse_forms(self):
        assert DistSpec.parse("gamma:10,0.5") == DistSpec.gamma(10, 0.5)
        assert DistSpec.parse("mixture") == DistSpec.mixture()
        m = DistSpec.parse("mixture:0.5,0.5/0,1/1,2")
        assert m.means == (0.0, 1.0) and m.sigmas == (1.0, 2.0)
        assert DistSpec.parse("file:/tmp/x.txt").path == "/tmp/x.txt"

    def test_describe_roundtrip(self):
        for spec in (DistSpec.gamma(3.5, 2.0), DistSpec.mixture()):
            assert DistSpec.parse(spec.describe()) == spec

    @pytest.mark.parametrize("text", ["gamma:-1,1", "gamma:1", "mixture:0.5,0.6/0,1/1,1",
                                      "mixture:1/0/0", "poisson:3", "file:"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            DistSpec.parse(text)

    def test_gamma_density_is_rate_parametrised(self):
        g = DistSpec.gamma(10, 0.5)
        x = 17.0
        by_hand = 0.5**10 * x**9 * np.exp(-0.5 * x) / 362880.0
        assert g.pdf(x) == pytest.approx(by_hand, rel=1e-12)
        assert g.mean() == 20.0

    def test_mixture_density(self):
        m = DistSpec.mixture()
        x = np.array([-10.0, 0.0, 5.0])
        ref = 0.6 * stats.norm.pdf(x, -10, 5) + 0.4 * stats.norm.pdf(x, 5, 5)
        assert np.allclose(m.pdf(x), ref)
        assert m.cdf(np.inf) == pytest.approx(1.0)


class TestSampling:
    def test_gamma_moments(self):
        x = draw_sample(DistSpec.gamma(10, 0.5), 50_000, seed=0)
        assert abs(x.mean() - 20.0) < 0.5
        assert abs(x.var() - 40.0) < 3.0

    def test_mixture_mean(self):
        x = draw_sample(DistSpec.mixture(), 50_000, seed=0)
        assert abs(x.mean() + 4.0) < 0.2

    def test_moments_within_five_standard_errors(self):
        n = 50_000
        for seed in range(3):
            x = draw_sample(DistSpec.gamma(10, 0.5), n, seed)
            assert abs(x.mean() - 20.0) < 5 * np.sqrt(40.0 / n)

    def test_deterministic(self):
        a = draw_sample(DistSpec.mixture(), 100, 9)
        assert np.array_equal(a, draw_sample(DistSpec.mixture(), 100, 9))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            draw_sample(DistSpec.gamma(), 0)

    def test_file_kind(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("# header\n1.5\n\n2.5\n3.5\n")
        assert list(draw_sample(DistSpec.parse(f"file:{f}"), 2)) == [1.5, 2.5]
        with pytest.raises(ValueError):
            draw_sample(DistSpec.parse(f"file:{f}"), 4)


class TestReadSample:
    def test_bad_line_reports_line_number(self, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("1.0\n2.0\nabc\n")
        with pytest.raises(SampleFileError, match=":3:"):
            read_sample(f)

    def test_missing_and_empty(self, tmp_path):
        with pytest.raises(SampleFileError):
            read_sample(tmp_path / "nope.txt")
        (tmp_path / "e.txt").write_text("# only comments\n")
        with pytest.raises(SampleFileError):
            read_sample(tmp_path / "e.txt")

    def test_non_finite(self, tmp_path):
        (tmp_path / "n.txt").write_text("1\nnan\n")
        with pytest.raises(SampleFileError):
            read_sample(tmp_path / "n.txt")


class TestMetrics:
    def test_mse_examples(self):
        assert mse([1, 2, 3], [1, 2, 3]) == 0.0
        assert mse([1, 0], [0, 0]) == 0.5
        with pytest.raises(ValueError):
            mse([1, 2], [1])

    def test_kl_examples(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)
        expected = 0.5 * np.log(2) + 0.5 * np.log(2 / 3)
        assert expected == pytest.approx(0.14384, abs=1e-5)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(expected, rel=1e-12)

    def test_kl_handles_zeros(self):
        v = kl_divergence([0.0, 1.0], [1.0, 0.0])
        assert np.isfinite(v) and v > 0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=50),
           st.randoms(use_true_random=False))
    def test_permutation_equivariance(self, pairs, rnd):
        shuffled = pairs[:]
        rnd.shuffle(shuffled)
        a, b = map(list, zip(*pairs))
        c, d = map(list, zip(*shuffled))
        assert mse(a, b) == pytest.approx(mse(c, d), rel=1e-9, abs=1e-300)
        assert kl_divergence(a, b) == pytest.approx(kl_divergence(c, d), rel=1e-9, abs=1e-12)
        assert mse(a, b) >= 0 and kl_divergence(a, b) >= -1e-12

    def test_histogram_truth(self, rng):
        x = rng.normal(size=10_000)
        c, dens, cdf = histogram_truth(x)
        assert c.size == 34
        assert np.sum(dens * np.diff(c).mean()) == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(cdf) >= 0)


class TestKde:
    def test_single_point_tophat(self):
        h = 0.25
        grid = np.array([-0.3, -0.2, 0.0, 0.24, 0.26])
        assert np.allclose(kde_estimate([0.0], "tophat", h, grid), [0, 2, 2, 2, 0])

    def test_tophat_piecewise_constant(self):
        dens = kde_estimate([0.0, 1.0, 3.0], "tophat", 0.5, np.linspace(-1, 4, 501))
        assert set(np.round(dens * 3, 12)) <= {0.0, 1.0, 2.0}

    @pytest.mark.parametrize("kernel", ["tophat", "exponential"])
    def test_normalisation(self, rng, kernel):
        x = rng.gamma(3.0, 1.0, 2000)
        grid = np.linspace(-5, 30, 70_001)
        dens = kde_estimate(x, kernel, 0.3, grid)
        assert np.all(dens >= 0)
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)

    def test_exponential_matches_direct_sum(self, rng):
        x = rng.normal(size=300)
        grid = np.linspace(-4, 4, 57)
        for h in (1e-4, 0.01, 0.5):
            direct = np.exp(-np.abs(grid[:, None] - x[None, :]) / h).sum(axis=1) / (2 * x.size * h)
            assert np.allclose(kde_estimate(x, "exponential", h, grid), direct, rtol=1e-12, atol=1e-300)

    def test_exponential_wide_range_no_overflow(self):
        x = np.array([0.0, 1e3, 2e3])
        dens = kde_estimate(x, "exponential", 1e-3, x)
        assert np.allclose(dens, 1 / (2 * 3 * 1e-3))

    def test_rejects(self):
        with pytest.raises(ValueError):
            kde_estimate([1.0], "gaussian", 0.1, [0.0])
        with pytest.raises(ValueError):
            kde_estimate([1.0], "tophat", 0.0, [0.0])

    def test_normal_sample_tuned_mse(self, rng):
        x = rng.standard_normal(10_000)
        h = kde_bandwidth_search(x, "exponential", n_candidates=200)
        grid = np.linspace(-4, 4, 500)
        assert mse(kde_estimate(x, "exponential", h, grid), stats.norm.pdf(grid)) < 1e-3

    def test_bandwidth_strictly_inside_range(self):
        x = draw_sample(DistSpec.mixture(), 5000, 1)
        x = (x - x.min()) / (x.max() - x.min())
        bw = np.geomspace(1e-5, 1, 300)
        for kernel in ("tophat", "exponential"):
            h = kde_bandwidth_search(x, kernel, n_candidates=300)
            assert bw[0] < h < bw[-1]

    def test_bandwidth_shrinks_with_n(self):
        small, large = [], []
        for seed in range(10):
            x = draw_sample(DistSpec.gamma(10, 0.5), 4000, seed) / 60.0
            small.append(kde_bandwidth_search(x[:400], "exponential", n_candidates=100, seed=seed))
            large.append(kde_bandwidth_search(x, "exponential", n_candidates=100, seed=seed))
        assert np.mean(large) < np.mean(small)

    def test_tiny_sample(self):
        h = kde_bandwidth_search([0.1, 0.2, 0.2, 0.5, 0.9], "tophat")
        assert np.isfinite(h) and h > 0
        with pytest.raises(ValueError):
            kde_bandwidth_search([0.1, 0.2], "tophat")

    def test_deterministic(self, rng):
        x = rng.normal(size=500)
        assert kde_bandwidth_search(x, "tophat", seed=4) == kde_bandwidth_search(x, "tophat", seed=4)

import numpy as np
import pytest

from collrat.errors import ArgumentError
from collrat.inference import aggregate
from collrat.simulate import (
    DgpSpec,
    benchmark_dgp,
    rejection_rate,
    simulate_panel,
    table1_means,
    volume,
    volume_table,
)


class TestTable1:
    def test_construction(self):
        means = table1_means()
        assert means["mu0"] == pytest.approx([2 / 3, 1 / 3, 2 / 3])
        assert means["mu4"] == pytest.approx([2 / 3 - 0.08, 1 / 3 + 0.08, 2 / 3 - 0.08])
        # constructed, not transcribed: 2/3 + 0.08 = 0.74666..., not 0.75
        assert means["mu4p"] == pytest.approx([0.746667, 0.253333, 0.746667], abs=1e-6)
        assert len(means) == 9

    def test_mu0_on_facet(self):
        mu0 = table1_means()["mu0"]
        directed_sum = mu0[0] + mu0[2] + (1 - mu0[1])
        assert directed_sum == pytest.approx(2.0)

    def test_unknown_name(self):
        with pytest.raises(ArgumentError):
            benchmark_dgp("mu9")


class TestSimulatePanel:
    def test_degenerate_spec_deterministic_responses(self):
        spec = DgpSpec(np.array([1.0, 1.0, 0.0]), np.zeros((3, 3)))
        panel = simulate_panel(spec, 50, seed=0)
        obs = panel.counts > 0
        assert set(np.unique(panel.rho_bar[obs])) <= {0.0, 1.0}
        assert np.all(panel.rho_bar[obs][:, None] == panel.rho_bar[obs][:, None])
        est = aggregate(panel)
        assert est.rho_hat.values == pytest.approx([1.0, 1.0, 0.0])

    def test_replicate_first_identical_within_pair(self):
        spec = benchmark_dgp("mu0", regime="replicate_first")
        panel = simulate_panel(spec, 200, seed=1)
        multi = panel.counts > 1
        # a pair answered K > 1 times still shows a {0,1} mean: all repeats equal
        assert set(np.unique(panel.rho_bar[multi])) <= {0.0, 1.0}

    def test_replicate_presentation_mixes_two_draws(self):
        spec = benchmark_dgp("mu0", regime="replicate_presentation")
        panel = simulate_panel(spec, 2000, seed=2)
        vals = panel.rho_bar[panel.counts > 1]
        assert np.any((vals > 0) & (vals < 1))  # both orientations can disagree

    def test_seed_reproducibility(self):
        spec = benchmark_dgp("mu2")
        a = simulate_panel(spec, 100, seed=42)
        b = simulate_panel(spec, 100, seed=42)
        assert np.array_equal(a.rho_bar, b.rho_bar)
        assert np.array_equal(a.counts, b.counts)

    def test_clip_diagnostics(self):
        spec = DgpSpec(np.array([0.95, 0.5, 0.05]), 0.04 * np.eye(3))
        panel, info = simulate_panel(spec, 500, seed=3, return_info=True)
        assert info.clipped_entries > 0
        assert info.total_entries == 1500
        assert panel.rho_bar.max() <= 1.0

    def test_regimes_share_marginal_means(self):
        mu = table1_means()["mu0"]
        exp = {}
        for regime in ("independent", "replicate_first", "replicate_presentation"):
            spec = benchmark_dgp("mu0", regime=regime)
            panel = simulate_panel(spec, 6000, seed=4)
            exp[regime] = aggregate(panel).rho_hat.values
        for regime, est in exp.items():
            assert est == pytest.approx(mu, abs=0.025), regime

    def test_spec_validation(self):
        with pytest.raises(ArgumentError):
            DgpSpec(np.array([1.5, 0.5, 0.5]), np.eye(3))
        with pytest.raises(ArgumentError):
            DgpSpec(np.array([0.5, 0.5, 0.5]), -np.eye(3))
        with pytest.raises(ArgumentError):
            DgpSpec(np.array([0.5, 0.5, 0.5]), np.eye(3), regime="sometimes")

    def test_semidefinite_covariance_fallback(self):
        sig = np.array([[0.01, 0.01, 0.0], [0.01, 0.01, 0.0], [0.0, 0.0, 0.0]])
        spec = DgpSpec(np.array([0.5, 0.5, 0.5]), sig)
        panel = simulate_panel(spec, 300, seed=5)
        # first two coordinates perfectly correlated draws
        assert panel.rho_bar.shape == (300, 3)


class TestRejectionRate:
    def test_monotone_along_ray(self):
        rates = {}
        for name in ("mu0", "mu2p", "mu4p"):
            spec = benchmark_dgp(name)
            rates[name] = rejection_rate(
                spec, 200, 100, "css", 0.05, "n13", 300, seed=5
            ).rate
        assert rates["mu0"] <= rates["mu2p"] + 0.1
        assert rates["mu2p"] <= rates["mu4p"] + 0.1
        assert rates["mu4p"] > 0.9

    def test_result_fields(self):
        spec = benchmark_dgp("mu4")
        res = rejection_rate(spec, 100, 100, "css", 0.05, "n13", 200, seed=6)
        assert res.rate <= 0.05
        assert 0 <= res.ci_low <= res.rate <= res.ci_high <= 1
        assert res.config["label"] == "mu4"
        with pytest.raises(ArgumentError):
            rejection_rate(spec, 100, 50, "css")


class TestVolume:
    def test_exact_values(self):
        assert volume("wu", 3).value == pytest.approx(0.75)
        assert volume("wu", 4).value == pytest.approx(0.375)
        assert volume("wu", 5).value == pytest.approx(0.1171875)
        assert volume("mu", 3).value == pytest.approx(0.5)
        assert volume("mu", 4).value == pytest.approx(176 / 1920)
        assert volume("ss", 3).value == pytest.approx(0.25)
        assert volume("css", 3).value == pytest.approx(2 / 3)
        assert volume("cmu", 3).value == pytest.approx(2 / 3)
        assert volume("cwu", 3).value == pytest.approx(23 / 24)

    def test_exact_has_zero_se(self):
        est = volume("wu", 4, "exact")
        assert est.se == 0.0 and est.half_width95 == 0.0

    @pytest.mark.parametrize("n,expected", [(3, 0.75), (4, 0.375)])
    def test_wu_exact_matches_mc(self, n, expected):
        est = volume("wu", n, "monte_carlo", samples=200_000, seed=7)
        assert abs(est.value - expected) <= 3 * est.se

    def test_mc_css_small(self):
        est = volume("css", 3, "monte_carlo", samples=200_000, seed=8)
        assert abs(est.value - 2 / 3) <= 3 * est.se

    def test_cwu_exact_matches_mc(self):
        est = volume("cwu", 3, "monte_carlo", samples=200_000, seed=9)
        assert abs(est.value - 23 / 24) <= 3 * est.se

    def test_unsupported_combination(self):
        with pytest.raises(ArgumentError):
            volume("ss", 4, "exact")
        with pytest.raises(ArgumentError):
            volume("cwu", 4, "monte_carlo", samples=1000)

    def test_volume_table_layout(self):
        rows = volume_table(n_values=(3,), samples=20_000)
        assert [r.model for r in rows] == ["ss", "mu", "wu", "css"]


class TestLawOfLargeNumbers:
    def test_aggregate_near_mu(self):
        mu = table1_means()["mu0"]
        spec = benchmark_dgp("mu0")
        means = []
        for rep in range(60):
            panel = simulate_panel(spec, 400, seed=(10, rep))
            means.append(aggregate(panel).rho_hat.values)
        grand = np.mean(means, axis=0)
        se = np.std(means, axis=0, ddof=1) / np.sqrt(len(means))
        assert np.all(np.abs(grand - mu) <= 4 * se + 1e-3)

"""Tests for the Monte Carlo estimators."""

import functools
import math
import os

import pytest

from lace_perc.errors import ResourceLimitError, TruncatedSampleWarning
from lace_perc.events import cluster, has_long_path
from lace_perc.graphs import build_graph
from lace_perc.montecarlo import (
    Estimate,
    chi_estimate,
    corrected_omega_pc,
    corrected_omega_value,
    min_length_connection_estimate,
    piN_mc,
    sample_origin_cluster,
    solve_chi_target,
    stream_bounds,
    sweep_chi,
    two_point_estimate,
    two_point_profile,
)
from lace_perc.oracle import (
    chi_exact,
    monotone_bracket,
    pi0_exact,
    piN_exact,
    tau_exact,
    tau_min_length_exact,
)
from lace_perc.series import fit_inverse_poly, predict_omega_pc

slow = pytest.mark.skipif(os.environ.get("LACE_PERC_SLOW") != "1", reason="set LACE_PERC_SLOW=1")

Q1 = build_graph("q1")
Q2 = build_graph("q2")
Q3 = build_graph("q3")
TORUS = build_graph("torus", 2, 5)


def within(estimate, exact, k=4.0):
    return abs(estimate.mean - exact) <= k * estimate.stderr + 1e-12


class TestEstimate:
    """Tests for the estimate container."""

    def test_from_sums(self):
        est = Estimate.from_sums(total=6, total_sq=14, samples=3, seed=0, stream_count=1)
        assert est.mean == pytest.approx(2.0)
        assert est.stderr == pytest.approx(math.sqrt(1.0 / 3.0))

    def test_single_sample_has_infinite_error(self):
        assert math.isinf(Estimate.from_sums(1, 1, 1, 0, 1).stderr)

    def test_single_sample_interval_is_unbounded(self):
        assert Estimate.from_sums(1, 1, 1, 0, 1).interval(2.0) == (-math.inf, math.inf)

    def test_scale(self):
        est = Estimate.from_sums(2, 2, 4, 0, 1, scale=0.5)
        assert est.mean == pytest.approx(0.25)

    def test_interval(self):
        est = Estimate(1.0, 0.1, 10, 0, 1)
        assert est.interval(2.0) == pytest.approx((0.8, 1.2))


class TestStreams:
    """Tests for the sample partition."""

    def test_covers_all_samples(self):
        bounds = stream_bounds(103, 16)
        assert bounds[0][1] == 0
        assert bounds[-1][2] == 103
        for (_, _, stop), (_, start, _) in zip(bounds, bounds[1:]):
            assert stop == start

    def test_drops_empty_streams(self):
        assert len(stream_bounds(3, 16)) == 3


class TestSampleOriginCluster:
    """Tests for single cluster samples."""

    def test_full_density(self):
        assert sample_origin_cluster(Q1, 1.0).size == 2

    def test_zero_density(self):
        sample = sample_origin_cluster(TORUS, 0.0, seed=4)
        assert sample.size == 1
        assert sample.vertices == {0}

    @pytest.mark.parametrize("graph", [Q3, TORUS, build_graph("torus", 3, 3)])
    def test_lazy_matches_eager(self, graph):
        for sample in range(40):
            lazy = sample_origin_cluster(graph, 0.45, seed=9, stream=2, sample=sample)
            eager = sample_origin_cluster(graph, 0.45, seed=9, stream=2, sample=sample, eager=True)
            assert lazy.vertices == eager.vertices

    def test_monotone_coupling(self):
        for sample in range(50):
            clusters = [
                sample_origin_cluster(Q3, p, seed=1, sample=sample).vertices for p in (0.1, 0.3, 0.6)
            ]
            assert clusters[0] <= clusters[1] <= clusters[2]

    def test_cap_truncates(self):
        with pytest.warns(TruncatedSampleWarning):
            sample = sample_origin_cluster(Q3, 1.0, cap=4)
        assert sample.truncated
        assert sample.size == 4

    def test_invalid_density(self):
        with pytest.raises(ValueError):
            sample_origin_cluster(Q1, 1.5)


class TestChiEstimate:
    """Tests for χ(p) estimation."""

    def test_zero_density(self):
        est = chi_estimate(Q3, 0.0, 100)
        assert est.mean == 1.0
        assert est.stderr == 0.0

    def test_q1(self):
        assert within(chi_estimate(Q1, 0.5, 20_000, seed=3), 1.5)

    def test_q2(self):
        assert within(chi_estimate(Q2, 0.3, 20_000, seed=5), 1.8097)

    @pytest.mark.parametrize("p", [0.1, 0.2, 0.3])
    def test_q3_matches_oracle(self, p):
        exact = chi_exact(Q3)(p)
        assert within(chi_estimate(Q3, p, 50_000, seed=2), exact)

    def test_worker_count_does_not_change_result(self):
        one = chi_estimate(TORUS, 0.3, 5_000, seed=8, stream_count=8, workers=1)
        four = chi_estimate(TORUS, 0.3, 5_000, seed=8, stream_count=8, workers=4)
        assert (one.total, one.total_sq) == (four.total, four.total_sq)
        assert one.mean == four.mean
        assert one.stderr == four.stderr

    def test_seed_changes_result(self):
        a = chi_estimate(Q3, 0.3, 2_000, seed=1)
        b = chi_estimate(Q3, 0.3, 2_000, seed=2)
        assert a.total != b.total

    def test_truncation_flagged(self):
        with pytest.warns(TruncatedSampleWarning):
            est = chi_estimate(Q3, 1.0, 10, cap=4)
        assert est.truncated == 10
        assert est.mean == 4.0

    def test_dense_buffer_guard(self):
        with pytest.raises(ResourceLimitError):
            chi_estimate(build_graph("hypercube", 25), 0.01, 10)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            chi_estimate(Q1, 0.5, 0)
        with pytest.raises(ValueError):
            chi_estimate(Q1, 0.5, 10, workers=0)


class TestTwoPoint:
    """Tests for τ_p and τ^(i) estimation."""

    def test_origin_is_certain(self):
        assert two_point_estimate(Q3, 0.2, 0, 500).mean == 1.0

    def test_q1_neighbor(self):
        assert within(two_point_estimate(Q1, 0.4, 1, 20_000, seed=4), 0.4)

    def test_profile_sums_to_chi(self):
        profile = two_point_profile(Q3, 0.3, 3_000, seed=6)
        chi = chi_estimate(Q3, 0.3, 3_000, seed=6)
        assert sum(est.total for est in profile) == chi.total

    def test_torus_matches_oracle(self):
        torus = build_graph("torus", 2, 4)
        exact = tau_exact(torus, 1, max_order=4)(0.05)
        # exact through p^4; the omitted tail is O(p^5)
        assert within(two_point_estimate(torus, 0.05, 1, 40_000, seed=3), exact, k=5.0)

    def test_min_length_neighbor_q2(self):
        est = min_length_connection_estimate(Q2, 0.5, 1, 2, 20_000, seed=7)
        assert within(est, 0.125)

    @pytest.mark.parametrize("length", [0, 3, 5])
    def test_min_length_matches_oracle_on_q3(self, length):
        exact = tau_min_length_exact(Q3, 7, length)(0.5)
        est = min_length_connection_estimate(Q3, 0.5, 7, length, 20_000, seed=1)
        assert within(est, exact)

    def test_min_length_zero_at_origin(self):
        assert min_length_connection_estimate(Q2, 0.3, 0, 0, 100).mean == 1.0
        assert min_length_connection_estimate(Q2, 0.3, 0, 1, 100).mean == 0.0


class TestSweep:
    """Tests for shared-randomness sweeps."""

    def test_zero_grid(self):
        assert [est.mean for est in sweep_chi(Q3, [0.0], 100)] == [1.0]

    def test_means_nondecreasing(self):
        grid = [k / 10 for k in range(1, 10)]
        means = [est.mean for est in sweep_chi(Q2, grid, 500, seed=3)]
        assert means == sorted(means)

    def test_grid_point_matches_oracle(self):
        (est,) = sweep_chi(Q3, [0.2], 50_000, seed=12)
        assert within(est, chi_exact(Q3)(0.2))

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            sweep_chi(Q2, [0.2, 1.2], 10)


class TestPiMonteCarlo:
    """Tests for nested Monte Carlo estimates of Π̂⁽ᴺ⁾."""

    def test_pi0_q2(self):
        est = piN_mc(Q2, 0, 0.3, 20_000, seed=1)
        assert within(est, float(pi0_exact(Q2)(0.3)))

    def test_pi1_q1(self):
        assert within(piN_mc(Q1, 1, 0.5, 5_000, seed=2), 0.25)

    def test_zero_density(self):
        for n in (0, 1, 2):
            assert piN_mc(Q2, n, 0.0, 50).mean == 0.0

    def test_level_out_of_range(self):
        with pytest.raises(ValueError):
            piN_mc(Q1, 3, 0.5, 10)


class TestCriticalPoint:
    """Tests for χ(p) = T solving and the corrected estimate."""

    def test_corrected_value(self):
        assert corrected_omega_value(12, 0.09, 200.0) == pytest.approx(1.085)

    def test_infinite_target(self):
        assert corrected_omega_value(10, 0.1, math.inf) == pytest.approx(1.0)

    def test_q1_half(self):
        result = solve_chi_target(Q1, target=1.5, seed=3, budget=200_000)
        assert abs(result.p_hat - 0.5) < 0.1
        assert 0.0 < result.p_hat < 1.0
        assert result.corrected_omega_p > result.omega_p_hat
        assert corrected_omega_pc(result) == result.corrected_omega_p

    def test_target_near_one(self):
        result = solve_chi_target(Q3, target=1.01, seed=5, budget=500_000)
        assert result.p_hat < 0.05

    def test_budget_exhaustion_flagged(self):
        result = solve_chi_target(Q3, target=4.0, tol=1e-6, budget=1_000, initial_samples=200)
        assert result.budget_exhausted
        assert result.budget_spent <= 1_000
        assert result.p_lo < result.p_hi
        assert result.p_lo <= result.p_hat <= result.p_hi

    def test_bracket_narrows_around_accepted_point(self):
        result = solve_chi_target(Q1, target=1.5, seed=3, budget=200_000)
        assert not result.budget_exhausted
        assert 0.0 <= result.p_lo <= result.p_hat <= result.p_hi <= 1.0
        assert result.p_hi - result.p_lo <= 2.0 ** (1 - result.steps)

    def test_target_must_exceed_one(self):
        with pytest.raises(ValueError):
            solve_chi_target(Q3, target=1.0)

    def test_target_below_vertex_count(self):
        with pytest.raises(ValueError):
            solve_chi_target(Q3, target=8.0)


DENSITIES = (0.1, 0.2, 0.3)
TRIALS = 60
# at least 95% of the seeded trials must land within 4 standard errors
MIN_COVERED = 57
# samples for Π̂⁽⁰⁾ per trial; at least 16 occupied four-cycles through 0 are expected
PI0_SAMPLES = {("q2", 0.2): 10_000, ("q2", 0.3): 2_000, ("q3", 0.2): 4_000, ("q3", 0.3): 1_000}


@functools.cache
def _exact(label):
    graph = build_graph(label)
    far = graph.vertex_count - 1
    polys = {
        "chi": chi_exact(graph),
        "near": tau_exact(graph, 1),
        "far": tau_exact(graph, far),
        "pi0": pi0_exact(graph),
        "pi1": piN_exact(graph, 1),
    }
    return {p: {key: poly(p) for key, poly in polys.items()} for p in DENSITIES}


def _covered(estimate_for, exact):
    return sum(within(estimate_for(seed), exact) for seed in range(TRIALS))


class TestOracleAgreement:
    """Seeded-trial coverage of the estimators against exact values on Q2 and Q3."""

    @slow
    @pytest.mark.parametrize("label", ["q2", "q3"])
    @pytest.mark.parametrize("p", DENSITIES)
    def test_chi(self, label, p):
        graph = build_graph(label)
        exact = _exact(label)[p]["chi"]
        assert _covered(lambda seed: chi_estimate(graph, p, 4_000, seed=seed), exact) >= MIN_COVERED

    @slow
    @pytest.mark.parametrize("label", ["q2", "q3"])
    @pytest.mark.parametrize("p", DENSITIES)
    def test_two_point(self, label, p):
        graph = build_graph(label)
        far = graph.vertex_count - 1
        for x, key in ((1, "near"), (far, "far")):
            exact = _exact(label)[p][key]
            covered = _covered(lambda seed: two_point_estimate(graph, p, x, 4_000, seed=seed), exact)
            assert covered >= MIN_COVERED, key

    @slow
    @pytest.mark.parametrize("label", ["q2", "q3"])
    @pytest.mark.parametrize("p", DENSITIES)
    def test_pi1(self, label, p):
        graph = build_graph(label)
        exact = _exact(label)[p]["pi1"]
        assert _covered(lambda seed: piN_mc(graph, 1, p, 1_000, seed=seed), exact) >= MIN_COVERED

    @slow
    @pytest.mark.parametrize("label, p", sorted(PI0_SAMPLES))
    def test_pi0(self, label, p):
        graph = build_graph(label)
        samples = PI0_SAMPLES[label, p]
        exact = _exact(label)[p]["pi0"]
        assert _covered(lambda seed: piN_mc(graph, 0, p, samples, seed=seed), exact) >= MIN_COVERED

    @slow
    @pytest.mark.parametrize("label, samples", [("q2", 200_000), ("q3", 60_000)])
    def test_pi0_rare_at_low_density(self, label, samples):
        # an occupied four-cycle through 0 has probability of order p^4; one long run replaces 60
        graph = build_graph(label)
        exact = _exact(label)[0.1]["pi0"]
        assert within(piN_mc(graph, 0, 0.1, samples, seed=11, workers=4), exact)

    @slow
    def test_torus_side_four_within_brackets(self):
        torus = build_graph("torus", 2, 4)

        def observables(config):
            members = cluster(config, 0)
            return len(members), int(1 in members), int(has_long_path(config, 0, 1, 3))

        brackets = monotone_bracket(
            torus, observables, DENSITIES, 6, [torus.vertex_count, 1, 1], width=3
        )
        for p, bounds in zip(DENSITIES, brackets):
            estimates = (
                chi_estimate(torus, p, 20_000, seed=1),
                two_point_estimate(torus, p, 1, 20_000, seed=2),
                min_length_connection_estimate(torus, p, 1, 3, 20_000, seed=3),
            )
            for est, (low, high) in zip(estimates, bounds):
                assert float(low) - 4 * est.stderr <= est.mean <= float(high) + 4 * est.stderr


HYPERCUBE_ENVELOPES = {10: 0.35, 12: 0.17, 14: 0.09}
TORUS_ENVELOPES = {5: 0.13, 6: 0.06, 7: 0.03}


@functools.cache
def _solved(kind, n):
    graph = build_graph("hypercube", n) if kind == "hypercube" else build_graph("torus", n, 6)
    return solve_chi_target(graph, target=200.0, seed=0, workers=4)


def _deviation(result):
    graph = result.graph
    return result.corrected_omega_p - predict_omega_pc(graph.omega, 2, graph.kind)


class TestCriticalExpansion:
    """Ωp̂ + 1/T at T = 200 against the three-term expansion of Ωp_c."""

    @slow
    @pytest.mark.parametrize(
        "kind, envelopes", [("hypercube", HYPERCUBE_ENVELOPES), ("torus", TORUS_ENVELOPES)]
    )
    def test_closer_to_three_terms_and_shrinking(self, kind, envelopes):
        deviations = []
        for n, envelope in envelopes.items():
            result = _solved(kind, n)
            omega = result.graph.omega
            three = predict_omega_pc(omega, 2, kind)
            two = predict_omega_pc(omega, 1, kind)
            assert abs(result.corrected_omega_p - three) < abs(result.corrected_omega_p - two)
            assert 0.0 < _deviation(result) < envelope
            deviations.append(_deviation(result))
        assert deviations == sorted(deviations, reverse=True)

    @slow
    @pytest.mark.xfail(
        strict=False, reason="p̂ at T = 200 sits above p_c; the drift of Π̂ exceeds 20/Ω³"
    )
    @pytest.mark.parametrize("kind, n", [("hypercube", 10), ("hypercube", 12), ("torus", 5)])
    def test_within_cubic_tolerance(self, kind, n):
        result = _solved(kind, n)
        assert abs(_deviation(result)) <= 20.0 / result.graph.omega**3

    @slow
    @pytest.mark.xfail(strict=False, reason="the deviation from the expansion is not O(Ω⁻³)")
    def test_fit_recovers_first_order_coefficient(self):
        data = []
        for n in (8, 10, 12, 14):
            result = _solved("hypercube", n)
            chi = result.chi_at_p_hat
            data.append((result.graph.omega, result.corrected_omega_p, chi.stderr / chi.mean**2))
        fit = fit_inverse_poly(data)
        assert 0.9 <= fit.coefficients[1] <= 1.1

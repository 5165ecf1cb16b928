"""Tests for link-performance analytics: ROC curves, BER minimization,
mutual information, and capacity maximization.

Frozen numbers come from closed forms (binary entropy, Z-channel capacity)
and from deterministic seeded sweeps that were cross-checked against
brute-force grid searches before being recorded.
"""

import math

import numpy as np
import pytest
from scipy import special

from mcvd.channel import (
    ChannelSpec,
    degradation_rate_from_half_life,
    hitting_fraction_total,
)
from mcvd.link import (
    ChannelResponseTable,
    Convergence,
    ErrorProfile,
    LinkConfig,
    build_response_table,
)
from mcvd.metrics import (
    CapacityResult,
    FALLBACK_MEMORY,
    RocCurve,
    ber,
    binary_entropy,
    capacity,
    capacity_at_ts,
    default_symbol_time_grid,
    mutual_information,
    pd_at_pf,
    response_table_with_fallback,
    roc_curve,
)

LAM16 = degradation_rate_from_half_life(0.016)
CH16 = ChannelSpec(r_r=10.0, r_0=14.0, D=79.4, lam=LAM16)
CH0 = ChannelSpec(r_r=10.0, r_0=14.0, D=79.4, lam=0.0)

FAST = Convergence(16, 500, 1e-5)
FULL = Convergence(64, 2000, 1e-5)


def channel_for(half_life: float, d: float = 4.0) -> ChannelSpec:
    lam = degradation_rate_from_half_life(half_life)
    return ChannelSpec(r_r=10.0, r_0=10.0 + d, D=79.4, lam=lam)


# ---------------------------------------------------------------------------
# binary entropy and mutual information
# ---------------------------------------------------------------------------


class TestBinaryEntropy:
    def test_endpoints_are_exact_zero(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_maximum_at_half(self):
        assert binary_entropy(0.5) == 1.0

    def test_known_value(self):
        assert binary_entropy(0.11) == pytest.approx(0.4999159581645281, rel=1e-12)

    def test_symmetry(self):
        assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8), rel=1e-15)

    def test_rejects_non_probabilities(self):
        for p in (-0.1, 1.1, math.nan):
            with pytest.raises(ValueError):
                binary_entropy(p)


class TestMutualInformation:
    def test_noiseless_uniform_channel_carries_one_bit(self):
        assert mutual_information(ErrorProfile(0.0, 0.0, 0.0), 0.5) == 1.0

    def test_noiseless_skewed_channel_carries_source_entropy(self):
        got = mutual_information(ErrorProfile(0.0, 0.0, 0.0), 0.3)
        assert got == pytest.approx(binary_entropy(0.3), rel=1e-15)

    def test_symmetric_crossover_known_value(self):
        got = mutual_information(ErrorProfile(0.11, 0.11, 0.11), 0.5)
        assert got == pytest.approx(0.500084041835472, rel=1e-12)
        assert got == pytest.approx(1.0 - binary_entropy(0.11), rel=1e-12)

    def test_output_independent_of_input_is_exactly_zero(self):
        # pe0 + pe1 = 1 makes the output distribution identical under both
        # inputs, killing the mutual information exactly
        for pe0 in (0.0, 0.25, 0.5, 0.7, 1.0):
            profile = ErrorProfile(pe0, 1.0 - pe0, 0.5)
            for pi1 in (0.1, 0.3, 0.5, 0.9):
                assert mutual_information(profile, pi1) == 0.0

    def test_positive_whenever_output_depends_on_input(self):
        for pe0 in (0.0, 0.2, 0.4):
            for pe1 in (0.0, 0.2, 0.4):
                profile = ErrorProfile(pe0, pe1, 0.5 * (pe0 + pe1))
                assert mutual_information(profile, 0.5) > 0.0

    def test_nonnegative_on_crossover_grid(self):
        for pe0 in np.linspace(0.0, 1.0, 9):
            for pe1 in np.linspace(0.0, 1.0, 9):
                profile = ErrorProfile(float(pe0), float(pe1), 0.5 * float(pe0 + pe1))
                for pi1 in (0.0, 0.25, 0.5, 0.75, 1.0):
                    assert mutual_information(profile, pi1) >= 0.0

    def test_degenerate_priors_carry_nothing(self):
        profile = ErrorProfile(0.1, 0.2, 0.15)
        assert mutual_information(profile, 0.0) == 0.0
        assert mutual_information(profile, 1.0) == 0.0

    def test_symmetric_crossovers_favor_uniform_prior(self):
        for p in (0.05, 0.11, 0.3):
            profile = ErrorProfile(p, p, p)
            at_half = mutual_information(profile, 0.5)
            for pi1 in np.linspace(0.01, 0.99, 25):
                assert at_half >= mutual_information(profile, float(pi1))

    def test_rejects_bad_prior(self):
        profile = ErrorProfile(0.1, 0.1, 0.1)
        for pi1 in (-0.1, 1.1, math.nan):
            with pytest.raises(ValueError):
                mutual_information(profile, pi1)


# ---------------------------------------------------------------------------
# ROC curves
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def fig4_roc():
    table = build_response_table(CH16, 0.06)
    cfg = LinkConfig(channel=CH16, t_s=0.06, n1=1000, n0=0, tau=0, K=table.K)
    return roc_curve(cfg, list(range(0, 81)), convergence=FULL, seed=0, table=table)


class TestRocCurve:
    def test_rejects_empty_and_disordered_points(self):
        with pytest.raises(ValueError):
            RocCurve(points=())
        with pytest.raises(ValueError):
            RocCurve(points=((0.5, 0.9, 1), (0.4, 0.8, 1)))  # repeated tau
        with pytest.raises(ValueError):
            RocCurve(points=((0.5, 0.9, 2), (0.4, 0.8, 1)))  # descending tau

    def test_rejects_non_monotone_curves(self):
        with pytest.raises(ValueError):
            RocCurve(points=((0.4, 0.9, 0), (0.5, 0.8, 1)))  # pf rises
        with pytest.raises(ValueError):
            RocCurve(points=((0.5, 0.8, 0), (0.4, 0.9, 1)))  # pd rises

    def test_rejects_out_of_range_probabilities(self):
        with pytest.raises(ValueError):
            RocCurve(points=((1.5, 0.9, 0),))
        with pytest.raises(ValueError):
            RocCurve(points=((0.5, -0.1, 0),))

    def test_array_accessors(self):
        curve = RocCurve(points=((0.5, 0.9, 0), (0.2, 0.7, 3)))
        np.testing.assert_array_equal(curve.pf, [0.5, 0.2])
        np.testing.assert_array_equal(curve.pd, [0.9, 0.7])
        np.testing.assert_array_equal(curve.taus, [0, 3])

    def test_curve_is_exactly_monotone(self, fig4_roc):
        assert np.all(np.diff(fig4_roc.pf) <= 0)
        assert np.all(np.diff(fig4_roc.pd) <= 0)
        assert np.all((fig4_roc.pf >= 0) & (fig4_roc.pf <= 1))
        assert np.all((fig4_roc.pd >= 0) & (fig4_roc.pd <= 1))

    def test_low_threshold_end_detects_everything(self, fig4_roc):
        assert fig4_roc.pd[0] == pytest.approx(1.0, abs=1e-9)

    def test_high_threshold_end_is_silent(self, fig4_roc):
        assert fig4_roc.pf[-1] == 0.0
        assert fig4_roc.pd[-1] == pytest.approx(0.0, abs=1e-9)

    def test_grid_validation(self):
        table = build_response_table(CH16, 0.06)
        cfg = LinkConfig(channel=CH16, t_s=0.06, n1=1000, n0=0, tau=0, K=table.K)
        with pytest.raises(ValueError):
            roc_curve(cfg, [], table=table)
        with pytest.raises(ValueError):
            roc_curve(cfg, [3, 2, 1], table=table)
        with pytest.raises(ValueError):
            roc_curve(cfg, [0, 0, 1], table=table)
        with pytest.raises(ValueError):
            roc_curve(cfg, [0.5, 1.5], table=table)


class TestPdAtPf:
    def test_picks_best_detection_within_budget(self):
        curve = RocCurve(points=((0.5, 0.9, 0), (0.09, 0.8, 1), (0.01, 0.5, 2)))
        assert pd_at_pf(curve, 0.1) == 0.8
        assert pd_at_pf(curve, 0.5) == 0.9
        assert pd_at_pf(curve, 0.01) == 0.5

    def test_monotone_in_budget(self, fig4_roc):
        values = [pd_at_pf(fig4_roc, b) for b in (0.01, 0.05, 0.1, 0.5)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_raises_when_budget_unreachable(self):
        curve = RocCurve(points=((0.5, 0.9, 0),))
        with pytest.raises(ValueError):
            pd_at_pf(curve, 0.1)

    def test_rejects_bad_budget(self, fig4_roc):
        for budget in (-0.1, 1.1, math.nan):
            with pytest.raises(ValueError):
                pd_at_pf(fig4_roc, budget)

    def test_faster_degradation_detects_better_at_fixed_false_alarm(self):
        # 30 ms slots: every shortening of the half-life buys detection
        # probability at the pf = 0.1 operating point, and stretching the
        # slot to 40 ms helps every half-life
        pd = {}
        for t_s in (0.03, 0.04):
            for half_life in (0.008, 0.016, 0.064, 0.128):
                ch = channel_for(half_life)
                table = build_response_table(ch, t_s)
                cfg = LinkConfig(channel=ch, t_s=t_s, n1=1000, n0=0, tau=0, K=table.K)
                curve = roc_curve(
                    cfg, list(range(0, 401)), convergence=FAST, seed=0, table=table
                )
                pd[(t_s, half_life)] = pd_at_pf(curve, 0.1)
        ordered = [pd[(0.03, h)] for h in (0.008, 0.016, 0.064, 0.128)]
        assert all(a > b for a, b in zip(ordered, ordered[1:]))
        for half_life in (0.008, 0.016, 0.064, 0.128):
            assert pd[(0.04, half_life)] > pd[(0.03, half_life)]


# ---------------------------------------------------------------------------
# BER minimization
# ---------------------------------------------------------------------------


class TestBer:
    def test_z_channel_minimum_is_at_zero_threshold(self):
        # one clean slot with mean 25 against a silent zero level: pe0 = 0
        # for every tau, so the minimum sits at tau = 0 with pe = e^-25 / 2
        total = hitting_fraction_total(CH16)
        table = ChannelResponseTable(
            channel=CH16, t_s=0.06, slots=[0.025], residual=total - 0.025
        )
        cfg = LinkConfig(channel=CH16, t_s=0.06, n1=1000, n0=0, tau=0, K=1)
        value, tau_star = ber(cfg, convergence=Convergence(8, 50, 1.0), seed=0, table=table)
        assert tau_star == 0
        assert value == pytest.approx(0.5 * math.exp(-25.0), rel=1e-9)

    def test_dead_channel_ties_break_to_zero_threshold(self):
        ch = channel_for(1e-6)
        table = build_response_table(ch, 0.06)
        cfg = LinkConfig(channel=ch, t_s=0.06, n1=1000, n0=0, tau=0, K=table.K)
        value, tau_star = ber(cfg, convergence=Convergence(8, 50, 1.0), seed=0, table=table)
        assert tau_star == 0
        assert value == pytest.approx(0.5, rel=1e-12)

    def test_sixty_ms_operating_point(self):
        table = build_response_table(CH16, 0.06)
        cfg = LinkConfig(channel=CH16, t_s=0.06, n1=1000, n0=0, tau=0, K=table.K)
        value, tau_star = ber(cfg, convergence=FULL, seed=0, table=table)
        assert 10 <= tau_star <= 20
        assert value < 1e-3
        assert value == pytest.approx(1.8286843133e-05, rel=1e-6)

    def test_too_fast_degradation_floors_the_error_rate(self):
        vals = {}
        for half_life in (0.001, 0.008):
            ch = channel_for(half_life)
            table = build_response_table(ch, 0.1)
            cfg = LinkConfig(channel=ch, t_s=0.1, n1=1000, n0=0, tau=0, K=table.K)
            vals[half_life], _ = ber(cfg, convergence=FAST, seed=0, table=table)
        assert vals[0.001] > 0.4  # floored near coin flipping
        assert vals[0.008] < 1e-3
        assert vals[0.001] > vals[0.008]

    def test_half_life_advantage_crosses_over_with_symbol_time(self):
        # fast degradation wins at short slots (ISI relief), loses at long
        # slots (it destroys the signal the longer slot would have caught)
        vals = {}
        for t_s in (0.015, 0.08):
            for half_life in (0.004, 0.008):
                ch = channel_for(half_life)
                table = build_response_table(ch, t_s)
                cfg = LinkConfig(channel=ch, t_s=t_s, n1=1000, n0=0, tau=0, K=table.K)
                vals[(t_s, half_life)], _ = ber(cfg, convergence=FAST, seed=0, table=table)
        assert vals[(0.015, 0.004)] < vals[(0.015, 0.008)]
        assert vals[(0.08, 0.004)] > vals[(0.08, 0.008)]

    def test_ber_nonincreasing_in_symbol_time(self):
        for half_life in (0.008, 0.016):
            ch = channel_for(half_life)
            values = []
            for t_s in np.arange(0.01, 0.105, 0.01):
                table = build_response_table(ch, float(t_s))
                cfg = LinkConfig(
                    channel=ch, t_s=float(t_s), n1=1000, n0=0, tau=0, K=table.K
                )
                v, _ = ber(cfg, convergence=FAST, seed=0, table=table)
                values.append(v)
            assert all(b <= a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------


class TestCapacityResult:
    def test_validates_fields(self):
        with pytest.raises(ValueError):
            CapacityResult(c_bits=1.5, c_bps=15.0, argmax=(0, 0.5, 0.1))
        with pytest.raises(ValueError):
            CapacityResult(c_bits=0.5, c_bps=1.0, argmax=(0, 0.5, 0.1))  # 0.5/0.1 != 1
        with pytest.raises(ValueError):
            CapacityResult(c_bits=0.5, c_bps=5.0, argmax=(0, 0.5))

    def test_accessors(self):
        r = CapacityResult(c_bits=0.5, c_bps=5.0, argmax=(3, 0.4, 0.1))
        assert r.tau == 3
        assert r.pi1 == 0.4
        assert r.t_s == 0.1


class TestResponseTableFallback:
    def test_uses_automatic_memory_when_available(self):
        t = response_table_with_fallback(CH16, 0.06)
        assert t.K == 4

    def test_falls_back_for_undegraded_channel(self):
        t = response_table_with_fallback(CH0, 0.06)
        assert t.K == FALLBACK_MEMORY


class TestCapacityAtTs:
    def test_dead_channel_has_zero_capacity(self):
        ch = channel_for(1e-6)
        r = capacity_at_ts(ch, 1000, 0.03, convergence=FAST, seed=0)
        assert r.c_bits == 0.0
        assert r.c_bps == 0.0

    def test_c_bps_is_c_bits_per_symbol_time(self):
        r = capacity_at_ts(CH16, 1000, 0.06, convergence=FAST, seed=0)
        assert r.c_bps == r.c_bits / 0.06
        assert 0.0 < r.c_bits <= 1.0
        assert r.t_s == 0.06

    def test_good_link_approaches_one_bit(self):
        # the 60 ms operating point has pe ~ 2e-5, so nearly a full bit
        r = capacity_at_ts(CH16, 1000, 0.06, convergence=FAST, seed=0)
        assert r.c_bits > 0.99

    def test_prior_search_attains_the_grid_supremum(self):
        # brute-force the prior on a fine grid at the returned threshold;
        # golden-section refinement must do at least as well
        ch = channel_for(0.002)
        r = capacity_at_ts(ch, 1000, 0.03, convergence=FAST, seed=0)
        table = response_table_with_fallback(ch, 0.03)
        cfg = LinkConfig(channel=ch, t_s=0.03, n1=1000, n0=0, tau=0, K=table.K)
        from mcvd.link import error_probs_for_taus

        profile = error_probs_for_taus(cfg, [r.tau], convergence=FAST, seed=0, table=table)[0]
        brute = max(
            mutual_information(profile, float(p)) for p in np.linspace(0.0, 1.0, 10001)
        )
        assert r.c_bits >= brute - 1e-6
        assert 0.3 < r.pi1 < 0.5  # skewed prior pays on this Z-like channel

    def test_fixed_prior_mode_reports_that_prior(self):
        r = capacity_at_ts(CH16, 1000, 0.06, convergence=FAST, seed=0, fixed_prior=0.5)
        assert r.pi1 == 0.5
        free = capacity_at_ts(CH16, 1000, 0.06, convergence=FAST, seed=0)
        assert free.c_bits >= r.c_bits - 1e-12

    def test_moderate_degradation_beats_both_extremes(self):
        # 30 ms slots: half-life 0.008 outperforms both the ISI-choked slow
        # channel and the signal-starved fast one
        c = {}
        for half_life in (0.002, 0.008, 0.128):
            ch = channel_for(half_life)
            c[half_life] = capacity_at_ts(ch, 1000, 0.03, convergence=FAST, seed=0).c_bits
        assert c[0.008] > c[0.002]
        assert c[0.008] > c[0.128]

    def test_undegraded_channel_uses_fallback_memory(self):
        r = capacity_at_ts(CH0, 1000, 0.06, convergence=FAST, seed=0, k_fallback=60)
        assert 0.0 <= r.c_bits <= 1.0


class TestCapacity:
    def test_single_point_grid_matches_capacity_at_ts(self):
        a = capacity(CH16, 1000, [0.06], convergence=FAST, seed=0)
        b = capacity_at_ts(CH16, 1000, 0.06, convergence=FAST, seed=0)
        assert a == b

    def test_picks_the_best_bps_point(self):
        grid = [0.02, 0.04, 0.08]
        best = capacity(CH16, 1000, grid, convergence=FAST, seed=0)
        singles = [capacity_at_ts(CH16, 1000, t, convergence=FAST, seed=0) for t in grid]
        assert best.c_bps == max(s.c_bps for s in singles)

    def test_dead_channel_tie_breaks_to_smallest_symbol_time(self):
        ch = channel_for(1e-6)
        r = capacity(ch, 1000, [0.06, 0.03], convergence=FAST, seed=0)
        assert r.c_bps == 0.0
        assert r.t_s == 0.03

    def test_default_grid_shape(self):
        grid = default_symbol_time_grid()
        assert len(grid) == 40
        assert grid[0] == pytest.approx(1e-3, rel=1e-12)
        assert grid[-1] == pytest.approx(1.0, rel=1e-12)
        assert np.all(np.diff(np.log(grid)) > 0)

    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            capacity(CH16, 1000, [])
        with pytest.raises(ValueError):
            capacity(CH16, 1000, [0.0, 0.1])
        with pytest.raises(ValueError):
            capacity(CH16, 1000, [math.inf])

    def test_capacity_per_second_curve_has_one_peak(self):
        # over the default symbol-time grid the bits/s curve rises to a
        # single interior peak and falls; points at the dead floor (zero
        # capacity up to fp residue) are excluded before counting
        for half_life in (0.008, 0.016):
            ch = channel_for(half_life)
            c = np.array(
                [
                    capacity_at_ts(ch, 1000, float(t), convergence=FAST, seed=0).c_bps
                    for t in default_symbol_time_grid()
                ]
            )
            alive = c > 1e-9 * c.max()
            vals = c[alive]
            interior_maxima = sum(
                1
                for i in range(1, len(vals) - 1)
                if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]
            )
            assert interior_maxima <= 1

    def test_short_distance_fast_degradation_multiplies_capacity(self):
        # 1 um gap: half-life 0.0005 s roughly triples the best bits/s
        # relative to the slowest tested degradation
        fast = capacity(channel_for(0.0005, d=1.0), 1000, convergence=FAST, seed=0)
        slow = capacity(channel_for(1.024, d=1.0), 1000, convergence=FAST, seed=0)
        ratio = fast.c_bps / slow.c_bps
        assert 2.0 <= ratio <= 4.0

    def test_long_distance_fast_degradation_kills_capacity(self):
        fast = capacity(channel_for(0.0005, d=50.0), 1000, convergence=FAST, seed=0)
        slow = capacity(channel_for(1.024, d=50.0), 1000, convergence=FAST, seed=0)
        assert slow.c_bps > 0.0
        assert fast.c_bps < slow.c_bps

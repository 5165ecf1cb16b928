"""Link-performance analytics on top of the detection model.

ROC curves, minimum-error threshold search, and capacity maximization all
consume the same sequence-averaged error probabilities as the link layer,
so intersymbol interference is priced into every figure of merit. The
mutual-information ops treat a (pe0, pe1) pair as a binary asymmetric
channel; capacity optionally optimizes the input prior for each threshold
and symbol duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .channel import ChannelSpec
from .errors import ConvergenceError
from .link import (
    ChannelResponseTable,
    Convergence,
    ErrorProfile,
    LinkConfig,
    build_response_table,
    error_probs_for_taus,
)

__all__ = [
    "RocCurve",
    "CapacityResult",
    "binary_entropy",
    "roc_curve",
    "pd_at_pf",
    "ber",
    "mutual_information",
    "capacity_at_ts",
    "capacity",
    "default_symbol_time_grid",
    "response_table_with_fallback",
]

# pe1 above this level marks the threshold beyond which raising tau can
# only add misses faster than it removes false alarms
_PE1_CEILING = 1.0 - 1e-9

# table memory used when automatic selection cannot converge (channels
# without degradation have a power-law response tail)
FALLBACK_MEMORY = 100

_LN2 = math.log(2.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RocCurve:
    """Receiver operating characteristic over an ascending threshold grid.

    Each point is (pf, pd, tau): the false-alarm probability pe0 and the
    detection probability 1 - pe1 at integer threshold tau. Raising tau
    silences the detector, so both coordinates step downward along the
    curve.
    """

    points: tuple

    def __post_init__(self) -> None:
        pts = tuple((float(pf), float(pd), int(tau)) for pf, pd, tau in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("an ROC curve needs at least one point")
        for pf, pd, _ in pts:
            if not (0.0 <= pf <= 1.0 and 0.0 <= pd <= 1.0):
                raise ValueError("pf and pd must be probabilities")
        taus = [tau for _, _, tau in pts]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("thresholds must be strictly ascending")
        pfs = [pf for pf, _, _ in pts]
        pds = [_pd for _, _pd, _ in pts]
        if any(b > a for a, b in zip(pfs, pfs[1:])) or any(
            b > a for a, b in zip(pds, pds[1:])
        ):
            raise ValueError("pf and pd must be nonincreasing in tau")

    @property
    def pf(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def pd(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def taus(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])


@dataclass(frozen=True)
class CapacityResult:
    """Best mutual information found, with the settings that achieve it.

    ``argmax`` is (tau, pi1, t_s); ``c_bps`` is ``c_bits`` per symbol
    duration.
    """

    c_bits: float
    c_bps: float
    argmax: tuple

    def __post_init__(self) -> None:
        if not (0.0 <= self.c_bits <= 1.0):
            raise ValueError(f"c_bits must lie in [0, 1], got {self.c_bits!r}")
        if len(self.argmax) != 3:
            raise ValueError("argmax must be (tau, pi1, t_s)")
        tau, pi1, t_s = self.argmax
        if self.c_bps != self.c_bits / t_s:
            raise ValueError("c_bps must equal c_bits / t_s")

    @property
    def tau(self) -> int:
        return self.argmax[0]

    @property
    def pi1(self) -> float:
        return self.argmax[1]

    @property
    def t_s(self) -> float:
        return self.argmax[2]


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) source in bits, with 0 log 0 = 0."""
    if math.isnan(p) or not (0.0 <= p <= 1.0):
        raise ValueError(f"p must be a probability, got {p!r}")
    return float(-(special.xlogy(p, p) + special.xlogy(1.0 - p, 1.0 - p)) / _LN2)


def mutual_information(profile: ErrorProfile, pi1: float) -> float:
    """I(S; S_hat) in bits for a binary asymmetric channel.

    The channel flips a transmitted 0 with probability ``profile.pe0`` and
    a transmitted 1 with probability ``profile.pe1``; the source emits 1
    with probability ``pi1``.
    """
    if math.isnan(pi1) or not (0.0 <= pi1 <= 1.0):
        raise ValueError(f"pi1 must be a probability, got {pi1!r}")
    if profile.pe0 + profile.pe1 == 1.0:
        return 0.0  # output independent of input, exactly
    pi0 = 1.0 - pi1
    q1 = pi0 * profile.pe0 + pi1 * (1.0 - profile.pe1)
    mi = binary_entropy(q1) - pi0 * binary_entropy(profile.pe0) - pi1 * binary_entropy(
        profile.pe1
    )
    return max(mi, 0.0)  # fp cancellation can leave a negative residue


def roc_curve(
    config: LinkConfig,
    taus,
    convergence: Convergence | None = None,
    seed: int = 0,
    table: ChannelResponseTable | None = None,
) -> RocCurve:
    """ROC points over an ascending integer threshold grid.

    The config's own threshold is ignored; every grid point is scored from
    one shared prefix ensemble, which keeps the curve exactly monotone.
    """
    grid = np.asarray(taus)
    if grid.size == 0:
        raise ValueError("taus must be nonempty")
    if grid.dtype.kind == "f":
        if np.any(grid != np.floor(grid)):
            raise ValueError("thresholds must be integers")
        grid = grid.astype(np.int64)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("thresholds must be strictly ascending")
    profiles = error_probs_for_taus(
        config, grid, convergence=convergence, seed=seed, table=table
    )
    points = [(p.pe0, 1.0 - p.pe1, int(t)) for t, p in zip(grid, profiles)]
    return RocCurve(points=tuple(points))


def pd_at_pf(curve: RocCurve, pf_budget: float) -> float:
    """Best detection probability among points whose pf fits the budget."""
    if math.isnan(pf_budget) or not (0.0 <= pf_budget <= 1.0):
        raise ValueError(f"pf_budget must be a probability, got {pf_budget!r}")
    eligible = [pd for pf, pd, _ in curve.points if pf <= pf_budget]
    if not eligible:
        raise ValueError(f"no ROC point has pf <= {pf_budget!r}")
    return max(eligible)


def _mean_cap(config: LinkConfig, table: ChannelResponseTable) -> float:
    """Largest Poisson mean any symbol can see (every slot fed by n1)."""
    return float(config.n1 * np.sum(table.slots))


def _tau_ceiling(config: LinkConfig, table: ChannelResponseTable) -> int:
    """A threshold provably past the point where pe1 exceeds the ceiling.

    pe1(tau) is a mixture of Poisson CDFs with means at most the all-ones
    ISI mean, so it exceeds the ceiling no later than that mean's upper
    quantile.
    """
    mu_hi = _mean_cap(config, table)
    return int(stats.poisson.ppf(_PE1_CEILING, mu_hi)) + 1 if mu_hi > 0 else 0


def _swept_profiles(
    config: LinkConfig,
    convergence: Convergence | None,
    seed: int,
    table: ChannelResponseTable,
):
    """Profiles for tau = 0 .. tau_max, where tau_max is the smallest
    threshold whose miss probability exceeds the ceiling (raising tau
    further is pointless)."""
    ceiling = _tau_ceiling(config, table)
    grid = np.arange(0, ceiling + 1)
    profiles = error_probs_for_taus(
        config, grid, convergence=convergence, seed=seed, table=table
    )
    for i, p in enumerate(profiles):
        if p.pe1 > _PE1_CEILING:
            return grid[: i + 1], profiles[: i + 1]
    return grid, profiles


def ber(
    config: LinkConfig,
    convergence: Convergence | None = None,
    seed: int = 0,
    table: ChannelResponseTable | None = None,
) -> tuple:
    """(minimum error probability, minimizing threshold).

    Exhaustive search over integer thresholds from zero up to the first
    threshold whose miss probability passes 1 - 1e-9; ties go to the
    smaller threshold. The config's own threshold is ignored.
    """
    table = table if table is not None else build_response_table(config.channel, config.t_s, k=config.K)
    grid, profiles = _swept_profiles(config, convergence, seed, table)
    pes = np.array([p.pe for p in profiles])
    best = int(np.argmin(pes))  # first index wins ties
    return float(pes[best]), int(grid[best])


def response_table_with_fallback(
    channel: ChannelSpec,
    t_s: float,
    k_fallback: int = FALLBACK_MEMORY,
) -> ChannelResponseTable:
    """Automatic response-table memory, truncated at ``k_fallback`` slots
    for channels whose tail never meets the automatic criterion."""
    try:
        return build_response_table(channel, t_s)
    except ConvergenceError:
        return build_response_table(channel, t_s, k=k_fallback)


def default_symbol_time_grid() -> np.ndarray:
    """Forty log-spaced symbol durations spanning 1 ms to 1 s."""
    return np.geomspace(1e-3, 1.0, 40)


def _best_prior(profile: ErrorProfile, fixed_prior: float | None) -> tuple:
    """(best pi1, MI there), optimizing by coarse grid plus golden section."""
    if fixed_prior is not None:
        return fixed_prior, mutual_information(profile, fixed_prior)

    grid = np.linspace(0.01, 0.99, 33)
    values = [mutual_information(profile, p) for p in grid]
    i = int(np.argmax(values))
    best_pi, best_mi = float(grid[i]), values[i]

    # golden-section refinement inside the bracketing grid cells
    # (mutual information is concave in the input distribution)
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc = mutual_information(profile, c)
    fd = mutual_information(profile, d)
    for _ in range(60):
        if b - a < 1e-10:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = mutual_information(profile, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = mutual_information(profile, d)
    mid = 0.5 * (a + b)
    refined = mutual_information(profile, mid)
    if refined > best_mi:
        best_pi, best_mi = mid, refined
    return best_pi, best_mi


def capacity_at_ts(
    channel: ChannelSpec,
    n1: int,
    t_s: float,
    n0: int = 0,
    convergence: Convergence | None = None,
    seed: int = 0,
    fixed_prior: float | None = None,
    k_fallback: int = FALLBACK_MEMORY,
    priors: tuple = (0.5, 0.5),
) -> CapacityResult:
    """Highest mutual information at one symbol duration.

    Sweeps every integer threshold up to the miss ceiling and, per
    threshold, either optimizes the input prior (grid seed plus
    golden-section refinement) or holds it at ``fixed_prior``. The
    crossover probabilities come from a prefix ensemble transmitted at
    ``priors``, so the channel law itself is held fixed while the prior
    is optimized.
    """
    table = response_table_with_fallback(channel, t_s, k_fallback)
    config = LinkConfig(
        channel=channel, t_s=t_s, n1=n1, n0=n0, tau=0, priors=priors, K=table.K
    )
    grid, profiles = _swept_profiles(config, convergence, seed, table)
    best = None
    for tau, profile in zip(grid, profiles):
        pi1, mi = _best_prior(profile, fixed_prior)
        if best is None or mi > best[0]:
            best = (mi, int(tau), pi1)
    mi, tau, pi1 = best
    return CapacityResult(c_bits=mi, c_bps=mi / t_s, argmax=(tau, pi1, float(t_s)))


def capacity(
    channel: ChannelSpec,
    n1: int,
    t_s_grid=None,
    n0: int = 0,
    convergence: Convergence | None = None,
    seed: int = 0,
    fixed_prior: float | None = None,
    k_fallback: int = FALLBACK_MEMORY,
    priors: tuple = (0.5, 0.5),
) -> CapacityResult:
    """Best bits-per-second capacity over a symbol-duration grid.

    Evaluates ``capacity_at_ts`` on every grid point and keeps the highest
    c_bps; exact ties go to the smaller (t_s, tau, pi1), in that order.
    """
    grid = default_symbol_time_grid() if t_s_grid is None else np.asarray(t_s_grid, dtype=float)
    grid = grid.reshape(-1)
    if grid.size == 0:
        raise ValueError("t_s_grid must be nonempty")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("symbol durations must be positive and finite")
    best = None
    for t_s in sorted(float(t) for t in grid):
        result = capacity_at_ts(
            channel,
            n1,
            t_s,
            n0=n0,
            convergence=convergence,
            seed=seed,
            fixed_prior=fixed_prior,
            k_fallback=k_fallback,
            priors=priors,
        )
        if best is None or result.c_bps > best.c_bps:
            best = result
    return best

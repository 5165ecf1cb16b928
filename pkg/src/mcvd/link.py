"""BCSK link layer: ISI-aware Poisson detection model and a binomial
Monte Carlo link simulator that validates it.

Bit-1 releases ``n1`` molecules at the start of its symbol slot, bit-0
releases ``n0`` (zero in every built-in experiment). The receiver counts
arrivals during each slot and decides 1 when the count exceeds an integer
threshold ``tau``. Arrivals in slot i are driven by the current symbol plus
the ``K-1`` previous ones through the per-slot capture fractions of
the channel, so error probabilities are averages over transmit prefixes.
The model treats per-slot counts as Poisson with the summed mean; the
simulator draws the exact per-emission binomials instead, which is how the
model's adequacy is judged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import ChannelSpec, hitting_fraction, hitting_fraction_total
from .errors import ConvergenceError

__all__ = [
    "Convergence",
    "LinkConfig",
    "ChannelResponseTable",
    "ErrorProfile",
    "LinkSimResult",
    "build_response_table",
    "poisson_mean_for_symbol",
    "detect_probs_for_symbol",
    "average_error_probs",
    "error_probs_for_taus",
    "simulate_link",
    "wilson_interval",
]

RESPONSE_TABLE_HARD_CAP = 10_000


@dataclass(frozen=True)
class Convergence:
    """Budget and tolerance for sequence-averaged error estimates."""

    n_sequences: int = 64
    z_max: int = 2000
    tol: float = 1e-5

    def __post_init__(self) -> None:
        if self.n_sequences < 1 or self.z_max < 2:
            raise ValueError("convergence budget must be positive")
        if not (self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol!r}")


@dataclass(frozen=True)
class LinkConfig:
    """A complete BCSK operating point.

    ``priors`` is (pi0, pi1), the transmit probabilities of bit-0 and
    bit-1. ``K`` is the ISI memory in symbols: slot 0 is the current
    symbol's own contribution and slots 1..K-1 come from earlier symbols.
    """

    channel: ChannelSpec
    t_s: float
    n1: int
    n0: int = 0
    tau: int = 0
    priors: tuple = (0.5, 0.5)
    K: int = 1

    def __post_init__(self) -> None:
        if not (self.t_s > 0) or not math.isfinite(self.t_s):
            raise ValueError(f"t_s must be positive and finite, got {self.t_s!r}")
        for name in ("n1", "n0", "tau", "K"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {v!r}")
        if not (self.n1 > self.n0 >= 0):
            raise ValueError(f"need n1 > n0 >= 0, got n1={self.n1}, n0={self.n0}")
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if len(self.priors) != 2:
            raise ValueError("priors must be a (pi0, pi1) pair")
        pi0, pi1 = self.priors
        if math.isnan(pi0) or math.isnan(pi1) or pi0 < 0 or pi1 < 0:
            raise ValueError(f"priors must be nonnegative, got {self.priors!r}")
        if abs(pi0 + pi1 - 1.0) > 1e-12:
            raise ValueError(f"priors must sum to 1, got {self.priors!r}")

    @property
    def pi0(self) -> float:
        return self.priors[0]

    @property
    def pi1(self) -> float:
        return self.priors[1]


@dataclass(frozen=True, eq=False)
class ChannelResponseTable:
    """Per-slot capture fractions for one (channel, t_s) pair.

    ``slots[j]`` is the expected fraction of an emission absorbed during
    the j-th symbol slot after its own; ``residual`` is everything beyond
    slot K-1. The slots plus residual always rebuild the total capture
    fraction.
    """

    channel: ChannelSpec
    t_s: float
    slots: np.ndarray
    residual: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", np.asarray(self.slots, dtype=float).reshape(-1))
        if len(self.slots) < 1:
            raise ValueError("table needs at least one slot")
        if np.any(self.slots < 0) or self.residual < -1e-15:
            raise ValueError("slot fractions and residual must be nonnegative")
        total = hitting_fraction_total(self.channel)
        if abs(float(np.sum(self.slots)) + self.residual - total) > 1e-12:
            raise ValueError("slots + residual must reconstruct the total capture fraction")

    @property
    def K(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class ErrorProfile:
    """Conditional and prior-weighted error probabilities.

    pe0 = P(decide 1 | sent 0), pe1 = P(decide 0 | sent 1),
    pe = pi0*pe0 + pi1*pe1 for the priors used to build it.
    """

    pe0: float
    pe1: float
    pe: float

    def __post_init__(self) -> None:
        for name in ("pe0", "pe1", "pe"):
            v = getattr(self, name)
            if math.isnan(v) or not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be a probability, got {v!r}")


@dataclass(frozen=True)
class LinkSimResult:
    """Decoded stream and empirical error rates from a link simulation."""

    bits: np.ndarray
    decoded: np.ndarray
    profile: ErrorProfile
    pe0_interval: tuple
    pe1_interval: tuple
    n_zero_bits: int
    n_one_bits: int


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple:
    """Wilson 95% score interval for a binomial proportion.

    Zero trials yield the vacuous interval (0, 1).
    """
    if trials < 0 or successes < 0 or successes > trials:
        raise ValueError("need 0 <= successes <= trials")
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)  # exact endpoint, no fp residue
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def build_response_table(
    channel: ChannelSpec,
    t_s: float,
    k: int | None = None,
    eps: float = 1e-6,
) -> ChannelResponseTable:
    """Slice the capture CDF into symbol slots.

    With ``k=None`` the memory is chosen automatically: the smallest K
    whose residual tail is below ``eps``. The residual of a channel
    without degradation decays like 1/sqrt(K t_s), so automatic selection
    fails for it (and for any config needing more than
    ``RESPONSE_TABLE_HARD_CAP`` slots) with a ConvergenceError; pass an
    explicit ``k`` to truncate deliberately at a documented residual.
    """
    if not (t_s > 0) or not math.isfinite(t_s):
        raise ValueError(f"t_s must be positive and finite, got {t_s!r}")
    total = hitting_fraction_total(channel)

    def residual_at(kk: int) -> float:
        return max(total - float(hitting_fraction(channel, kk * t_s)), 0.0)

    if k is None:
        if not (eps > 0):
            raise ValueError(f"eps must be positive, got {eps!r}")
        if residual_at(1) < eps:
            k = 1
        elif residual_at(RESPONSE_TABLE_HARD_CAP) >= eps:
            raise ConvergenceError(
                f"response tail never drops below eps={eps:g} within "
                f"{RESPONSE_TABLE_HARD_CAP} slots (lam={channel.lam:g}, t_s={t_s:g}); "
                "pass an explicit memory k to truncate deliberately"
            )
        else:
            lo, hi = 1, RESPONSE_TABLE_HARD_CAP  # residual(lo) >= eps > residual(hi)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if residual_at(mid) < eps:
                    hi = mid
                else:
                    lo = mid
            k = hi
    else:
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")

    edges = t_s * np.arange(0, int(k) + 1, dtype=float)
    cdf = hitting_fraction(channel, edges)
    slots = np.maximum(np.diff(cdf), 0.0)
    residual = max(total - float(cdf[-1]), 0.0)
    return ChannelResponseTable(channel=channel, t_s=t_s, slots=slots, residual=residual)


def _check_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.size == 0:
        raise ValueError("bit sequence must be nonempty")
    arr = arr.reshape(-1)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bits must be 0 or 1")
    return arr.astype(np.int64)


def poisson_mean_for_symbol(table: ChannelResponseTable, bits, i: int, n1: int, n0: int = 0):
    """Expected arrival count during symbol ``i`` (1-indexed) given the bits.

    mu_i = sum over j of emissions(bits[i-j]) * slots[j], with j running
    over the table memory that fits inside the prefix.
    """
    arr = _check_bits(bits)
    if not (1 <= i <= len(arr)):
        raise ValueError(f"symbol index {i} outside 1..{len(arr)}")
    m = min(i, table.K)
    emitted = np.where(arr[i - m : i][::-1] == 1, float(n1), float(n0))
    return float(np.dot(emitted, table.slots[:m]))


def _poisson_cdf(tau, mu):
    # pdtr handles mu=0 (returns 1); tau enters as a float count
    return special.pdtr(tau, mu)


def detect_probs_for_symbol(
    table: ChannelResponseTable, bits, i: int, tau: int, n1: int, n0: int = 0
) -> tuple:
    """(P(decide 1), P(decide 0)) for symbol ``i`` under the Poisson model.

    Decide-1 means the slot count exceeds ``tau``. Which side is correct
    depends on the transmitted bit at ``i``.
    """
    if not isinstance(tau, (int, np.integer)) or tau < 0:
        raise ValueError(f"tau must be a nonnegative integer, got {tau!r}")
    mu = poisson_mean_for_symbol(table, bits, i, n1, n0)
    p0 = float(_poisson_cdf(float(tau), mu))
    return 1.0 - p0, p0


def _table_for(config: LinkConfig, table: ChannelResponseTable | None) -> ChannelResponseTable:
    if table is None:
        return build_response_table(config.channel, config.t_s, k=config.K)
    if table.K != config.K or table.t_s != config.t_s or table.channel != config.channel:
        raise ValueError("response table does not match the link config")
    return table


def _symbol_mean_ensemble(
    table: ChannelResponseTable,
    config: LinkConfig,
    conv: Convergence,
    seed: int,
    want_variance: bool = False,
):
    """Conditional Poisson means over random transmit prefixes.

    Returns (mu0, mu1) arrays of shape (n_sequences, z_max): the slot-0
    mean for a hypothetical 0 or 1 at each position, on top of the ISI
    from the realized prefix. With ``want_variance`` the matching binomial
    variances are returned too (for the Gaussian variant).
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x15E)))
    slots = table.slots
    n_seq, z_max = conv.n_sequences, conv.z_max
    bits = (rng.random((n_seq, z_max)) < config.pi1).astype(np.int64)
    emissions = np.where(bits == 1, float(config.n1), float(config.n0))

    isi_mean = np.zeros((n_seq, z_max))
    K = table.K
    for j in range(1, K):
        isi_mean[:, j:] += emissions[:, :-j] * slots[j]
    mu0 = isi_mean + config.n0 * slots[0]
    mu1 = isi_mean + config.n1 * slots[0]
    if not want_variance:
        return mu0, mu1

    isi_var = np.zeros((n_seq, z_max))
    for j in range(1, K):
        isi_var[:, j:] += emissions[:, :-j] * slots[j] * (1.0 - slots[j])
    var0 = isi_var + config.n0 * slots[0] * (1.0 - slots[0])
    var1 = isi_var + config.n1 * slots[0] * (1.0 - slots[0])
    return mu0, mu1, var0, var1


def _conditional_errors(tau: float, mu0, mu1, var0=None, var1=None):
    """Per-sample error probabilities at an integer threshold."""
    if var0 is None:
        p0 = _poisson_cdf(tau, mu0)
        p1 = _poisson_cdf(tau, mu1)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            z0 = (tau + 0.5 - mu0) / np.sqrt(var0)
            z1 = (tau + 0.5 - mu1) / np.sqrt(var1)
        z0 = np.where(var0 == 0.0, np.where(tau + 0.5 >= mu0, np.inf, -np.inf), z0)
        z1 = np.where(var1 == 0.0, np.where(tau + 0.5 >= mu1, np.inf, -np.inf), z1)
        p0 = special.ndtr(z0)
        p1 = special.ndtr(z1)
    return 1.0 - p0, p1  # (error given 0, error given 1)


def average_error_probs(
    config: LinkConfig,
    convergence: Convergence | None = None,
    seed: int = 0,
    table: ChannelResponseTable | None = None,
) -> ErrorProfile:
    """Sequence-averaged error probabilities at the config's threshold.

    Averages the conditional decide-wrong probabilities over Monte Carlo
    transmit prefixes, extending the sequences until the running averages
    of pe0 and pe1 both move less than ``tol`` across the trailing tenth
    of the budget. Exhausting the budget without settling raises
    ConvergenceError with the partial profile attached.
    """
    conv = convergence or Convergence()
    table = _table_for(config, table)
    mu0, mu1 = _symbol_mean_ensemble(table, config, conv, seed)
    e0, e1 = _conditional_errors(float(config.tau), mu0, mu1)

    # running averages over symbols, pooled across sequences
    avg0 = np.cumsum(e0.mean(axis=0)) / np.arange(1, conv.z_max + 1)
    avg1 = np.cumsum(e1.mean(axis=0)) / np.arange(1, conv.z_max + 1)
    window = max(1, conv.z_max // 10)

    def profile_at(z: int) -> ErrorProfile:
        pe0, pe1 = float(avg0[z]), float(avg1[z])
        return ErrorProfile(pe0=pe0, pe1=pe1, pe=config.pi0 * pe0 + config.pi1 * pe1)

    for z in range(window, conv.z_max):
        lo = z - window
        move0 = np.ptp(avg0[lo : z + 1])
        move1 = np.ptp(avg1[lo : z + 1])
        if move0 < conv.tol and move1 < conv.tol:
            return profile_at(z)
    raise ConvergenceError(
        f"error averages still moving more than tol={conv.tol:g} after "
        f"{conv.z_max} symbols x {conv.n_sequences} sequences",
        partial=profile_at(conv.z_max - 1),
    )


def error_probs_for_taus(
    config: LinkConfig,
    taus,
    convergence: Convergence | None = None,
    seed: int = 0,
    table: ChannelResponseTable | None = None,
    model: str = "poisson",
) -> list:
    """Error profiles across a threshold grid from one shared ensemble.

    The full sequence budget is always spent (no early stopping), which
    makes sweeps deterministic and keeps pe0/pe1 exactly monotone in tau.
    ``model="gaussian"`` swaps in the continuity-corrected Gaussian
    approximation; it exists for comparison plots and is interpretive.
    """
    if model not in ("poisson", "gaussian"):
        raise ValueError(f"model must be 'poisson' or 'gaussian', got {model!r}")
    taus = np.asarray(taus)
    if taus.size == 0:
        raise ValueError("taus must be nonempty")
    if taus.dtype.kind == "f":
        if np.any(taus != np.floor(taus)):
            raise ValueError("thresholds must be integers")
        taus = taus.astype(np.int64)
    if np.any(taus < 0):
        raise ValueError("thresholds must be nonnegative")
    conv = convergence or Convergence()
    table = _table_for(config, table)

    if model == "gaussian":
        mu0, mu1, var0, var1 = _symbol_mean_ensemble(table, config, conv, seed, True)
        args = (mu0.ravel(), mu1.ravel(), var0.ravel(), var1.ravel())
    else:
        mu0, mu1 = _symbol_mean_ensemble(table, config, conv, seed)
        args = (mu0.ravel(), mu1.ravel())

    out = []
    for tau in taus:
        e0, e1 = _conditional_errors(float(tau), *args)
        pe0 = float(np.mean(e0))
        pe1 = float(np.mean(e1))
        out.append(ErrorProfile(pe0=pe0, pe1=pe1, pe=config.pi0 * pe0 + config.pi1 * pe1))
    return out


def simulate_link(
    config: LinkConfig,
    n_bits: int,
    seed: int = 0,
    table: ChannelResponseTable | None = None,
) -> LinkSimResult:
    """Transmit a random bit stream and demodulate it, exactly.

    Every emission contributes an independent binomial draw to each of its
    K downstream slots, so per-slot counts carry true binomial statistics
    rather than the Poisson idealization. Deterministic for fixed inputs.
    """
    if not isinstance(n_bits, (int, np.integer)) or n_bits < 1:
        raise ValueError(f"n_bits must be a positive integer, got {n_bits!r}")
    table = _table_for(config, table)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x51A1)))
    bits = (rng.random(n_bits) < config.pi1).astype(np.int8)
    emissions = np.where(bits == 1, config.n1, config.n0).astype(np.int64)

    counts = np.zeros(n_bits, dtype=np.int64)
    for j, frac in enumerate(table.slots):
        if j == 0:
            counts += rng.binomial(emissions, frac)
        else:
            counts[j:] += rng.binomial(emissions[:-j], frac)
    decoded = (counts > config.tau).astype(np.int8)

    ones = bits == 1
    n_one = int(np.count_nonzero(ones))
    n_zero = n_bits - n_one
    err0 = int(np.count_nonzero(decoded[~ones] == 1))
    err1 = int(np.count_nonzero(decoded[ones] == 0))
    pe0 = err0 / n_zero if n_zero else math.nan
    pe1 = err1 / n_one if n_one else math.nan
    profile = ErrorProfile(
        pe0=0.0 if n_zero == 0 else pe0,
        pe1=0.0 if n_one == 0 else pe1,
        pe=(err0 + err1) / n_bits,
    )
    return LinkSimResult(
        bits=bits,
        decoded=decoded,
        profile=profile,
        pe0_interval=wilson_interval(err0, n_zero),
        pe1_interval=wilson_interval(err1, n_one),
        n_zero_bits=n_zero,
        n_one_bits=n_one,
    )

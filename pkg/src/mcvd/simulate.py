"""Monte Carlo Brownian-motion simulator for the absorbing-sphere channel.

Each molecule starts at distance ``r_0`` from the receiver center and takes
independent Gaussian steps (sigma = sqrt(2 D dt) per coordinate). A molecule
is absorbed when a step ends with its distance to the center at or below
``r_r``; it degrades when its exponential lifetime elapses first; it is
recorded as alive if the horizon ends first. Degradation is sampled once per
molecule at release by default (one exponential draw); a literal per-step
Bernoulli mode exists behind ``degradation_mode="per_step"`` so the two can
be cross-checked.

Reproducibility contract: every molecule owns private counter-based RNG
streams keyed by (seed, molecule_index), so a run is bit-identical no matter
how molecules are chunked or partitioned across workers. Increments are
drawn in float32 (they carry at most 24 significant bits of physics) and
accumulated in float64.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec

__all__ = [
    "SimConfig",
    "HitRecordSet",
    "ArrivalHistogram",
    "simulate_burst",
    "bin_hits",
    "empirical_fraction",
    "write_hits_csv",
    "write_histogram_csv",
]

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

_STATUS_HIT = 0
_STATUS_DEGRADED = 1
_STATUS_ALIVE = 2


@dataclass(frozen=True)
class SimConfig:
    """One burst-release simulation run.

    Attributes:
        channel: channel geometry and physics.
        n_molecules: burst size, at least 1.
        step_dt: time step in seconds, 0 < step_dt <= horizon.
        horizon: total simulated time in seconds.
        seed: 64-bit nonnegative integer root seed.
        degradation_mode: "lifetime" draws one exponential lifetime per
            molecule; "per_step" flips a Bernoulli coin with probability
            1 - exp(-lam*step_dt) each step. Statistically equivalent.
        backend: "auto" uses the numba kernel when importable and falls
            back to numpy; "numba"/"numpy" force one. The two backends can
            differ by one ulp in accumulated positions, so forcing a
            backend makes runs comparable across machines.
        chunk_steps: how many steps of increments to draw per RNG call.
            Affects speed and memory only, never results.
    """

    channel: ChannelSpec
    n_molecules: int
    step_dt: float
    horizon: float
    seed: int
    degradation_mode: str = "lifetime"
    backend: str = "auto"
    chunk_steps: int = 16384

    def __post_init__(self) -> None:
        if not isinstance(self.n_molecules, (int, np.integer)) or self.n_molecules < 1:
            raise ValueError(f"n_molecules must be a positive integer, got {self.n_molecules!r}")
        if not (self.step_dt > 0):
            raise ValueError(f"step_dt must be positive, got {self.step_dt!r}")
        if not (self.horizon >= self.step_dt):
            raise ValueError(
                f"horizon {self.horizon!r} must be at least step_dt {self.step_dt!r}"
            )
        if not math.isfinite(self.horizon):
            raise ValueError("horizon must be finite")
        if not isinstance(self.seed, (int, np.integer)) or not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        if self.degradation_mode not in ("lifetime", "per_step"):
            raise ValueError(f"unknown degradation_mode {self.degradation_mode!r}")
        if self.backend not in ("auto", "numba", "numpy"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "numba" and not _HAVE_NUMBA:
            raise ValueError("backend 'numba' requested but numba is not importable")
        if not isinstance(self.chunk_steps, (int, np.integer)) or self.chunk_steps < 1:
            raise ValueError(f"chunk_steps must be a positive integer, got {self.chunk_steps!r}")
        for message in self.diagnostics():
            warnings.warn(message, stacklevel=3)

    def diagnostics(self) -> list[str]:
        """Soft warnings about suspicious but legal settings."""
        out = []
        rms = math.sqrt(2.0 * self.channel.D * self.step_dt)
        threshold = self.channel.r_r / 10.0
        if rms >= threshold:
            out.append(
                f"step_dt={self.step_dt:g} gives RMS per-coordinate step {rms:.3g} um, "
                f"not small against r_r/10={threshold:.3g} um; absorption may be "
                "under-detected at step ends"
            )
        return out

    @property
    def n_steps(self) -> int:
        """Number of whole steps inside the horizon."""
        ratio = self.horizon / self.step_dt
        n = int(math.floor(ratio))
        # horizon intended as an exact multiple can land one ulp short
        if ratio - n > 1.0 - 1e-9:
            n += 1
        return n


@dataclass(frozen=True)
class HitRecordSet:
    """Outcome of one simulated burst.

    ``hit_times`` holds one absorption time per captured molecule, in
    molecule-index order; the three outcome counts always add up to
    ``n_released``.
    """

    hit_times: np.ndarray
    n_released: int
    n_degraded: int
    n_alive_at_horizon: int
    horizon: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "hit_times", np.asarray(self.hit_times, dtype=float).reshape(-1)
        )
        if len(self.hit_times) + self.n_degraded + self.n_alive_at_horizon != self.n_released:
            raise ValueError("hit + degraded + alive must equal released")
        if len(self.hit_times) and (
            np.any(self.hit_times <= 0.0) or np.any(self.hit_times > self.horizon)
        ):
            raise ValueError("every hit time must lie in (0, horizon]")

    @property
    def n_absorbed(self) -> int:
        return int(len(self.hit_times))

    @property
    def absorbed_fraction(self) -> float:
        return self.n_absorbed / self.n_released


@dataclass(frozen=True)
class ArrivalHistogram:
    """Hit counts per time bin; bin k covers (t0 + k*w, t0 + (k+1)*w]."""

    bin_width: float
    counts: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64).reshape(-1))
        if not (self.bin_width > 0):
            raise ValueError(f"bin_width must be positive, got {self.bin_width!r}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def bin_starts(self) -> np.ndarray:
        return self.t0 + self.bin_width * np.arange(len(self.counts))


# ---------------------------------------------------------------------------
# walk kernels

if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _walk_numba(inc, sigma, x, y, z, rr2, n_check):  # pragma: no cover - jitted
        for i in range(n_check):
            x += np.float64(inc[i, 0]) * sigma
            y += np.float64(inc[i, 1]) * sigma
            z += np.float64(inc[i, 2]) * sigma
            if x * x + y * y + z * z <= rr2:
                return i + 1, x, y, z
        return 0, x, y, z


def _walk_numpy(inc, sigma, x, y, z, rr2, n_check):
    steps = inc[:n_check].astype(np.float64) * sigma
    pos = np.cumsum(steps, axis=0)
    pos[:, 0] += x
    pos[:, 1] += y
    pos[:, 2] += z
    hit = np.einsum("ij,ij->i", pos, pos) <= rr2
    j = int(np.argmax(hit))
    if hit[j]:
        return j + 1, pos[j, 0], pos[j, 1], pos[j, 2]
    return 0, pos[-1, 0], pos[-1, 1], pos[-1, 2]


def _resolve_backend(backend: str) -> str:
    if backend == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    return backend


def _run_range(config: SimConfig, lo: int, hi: int, start: tuple) -> tuple:
    """Simulate molecules [lo, hi); returns (hit_steps int64, status int8)."""
    spec = config.channel
    sigma = math.sqrt(2.0 * spec.D * config.step_dt)
    rr2 = spec.r_r * spec.r_r
    n_steps = config.n_steps
    chunk = int(config.chunk_steps)
    lam = spec.lam
    seed = int(config.seed)
    per_step = config.degradation_mode == "per_step"
    p_step = -math.expm1(-lam * config.step_dt) if per_step else 0.0
    kernel = _walk_numba if _resolve_backend(config.backend) == "numba" else _walk_numpy
    x0, y0, z0 = (float(v) for v in start)

    count = hi - lo
    hit_steps = np.zeros(count, dtype=np.int64)
    status = np.full(count, _STATUS_ALIVE, dtype=np.int8)

    for k in range(count):
        idx = lo + k
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, idx))))
        rng_deg = None
        allowed = n_steps  # absorption checks the molecule survives to make
        dies = False
        if lam > 0.0:
            rng_deg = np.random.Generator(
                np.random.Philox(np.random.SeedSequence((seed, idx, 1)))
            )
            if not per_step:
                checks = int(rng_deg.exponential(1.0 / lam) / config.step_dt)
                if checks < n_steps:
                    allowed = checks
                    dies = True

        x, y, z = x0, y0, z0
        done = 0
        hit_at = 0
        while done < allowed:
            m = min(chunk, allowed - done)
            inc = rng.standard_normal((m, 3), dtype=np.float32)
            n_check = m
            if per_step and lam > 0.0:
                u = rng_deg.random(m)
                dead = u < p_step
                j = int(np.argmax(dead))
                if dead[j]:
                    # degrades during step done+j+1, so only j checks happen
                    n_check = j
                    allowed = done + j
                    dies = True
            if n_check > 0:
                hit, x, y, z = kernel(inc, sigma, x, y, z, rr2, n_check)
                if hit:
                    hit_at = done + hit
                    break
            done += n_check
            if n_check < m:
                break
        if hit_at:
            hit_steps[k] = hit_at
            status[k] = _STATUS_HIT
        elif dies:
            status[k] = _STATUS_DEGRADED
    return hit_steps, status


def simulate_burst(config: SimConfig, n_workers: int = 1, *, start=None) -> HitRecordSet:
    """Run one burst release and classify every molecule.

    ``n_workers > 1`` partitions molecules across processes; results are
    bit-identical to the serial run because RNG streams are keyed by
    molecule index. ``start`` overrides the release point (default is
    (0, 0, r_0)); it must still sit at distance r_0 from the center, and
    exists so isotropy can be checked.
    """
    if start is None:
        start = (0.0, 0.0, config.channel.r_0)
    else:
        start = tuple(float(v) for v in start)
        norm = math.sqrt(sum(v * v for v in start))
        if not math.isclose(norm, config.channel.r_0, rel_tol=1e-9):
            raise ValueError(
                f"start point must lie at distance r_0={config.channel.r_0} "
                f"from the receiver center, got {norm}"
            )
    n = int(config.n_molecules)
    n_workers = max(1, int(n_workers))
    if n_workers == 1 or n < 2 * n_workers:
        hit_steps, status = _run_range(config, 0, n, start)
    else:
        bounds = np.linspace(0, n, n_workers + 1).astype(int)
        parts = []
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(_run_range, config, int(lo), int(hi), start)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            parts = [f.result() for f in futures]
        hit_steps = np.concatenate([p[0] for p in parts])
        status = np.concatenate([p[1] for p in parts])

    mask = status == _STATUS_HIT
    hit_times = np.minimum(hit_steps[mask] * config.step_dt, config.horizon)
    return HitRecordSet(
        hit_times=hit_times,
        n_released=n,
        n_degraded=int(np.sum(status == _STATUS_DEGRADED)),
        n_alive_at_horizon=int(np.sum(status == _STATUS_ALIVE)),
        horizon=config.horizon,
    )


def bin_hits(records: HitRecordSet, bin_width: float, n_bins: int | None = None) -> ArrivalHistogram:
    """Histogram hit times; bin k counts hits in (k*bin_width, (k+1)*bin_width].

    Without ``n_bins`` the histogram extends just far enough to hold the
    last hit. Every hit lands in a bin, so the total count is preserved.
    """
    if not (bin_width > 0):
        raise ValueError(f"bin_width must be positive, got {bin_width!r}")
    hits = records.hit_times
    if n_bins is None:
        n_bins = int(np.ceil(np.max(hits) / bin_width - 1e-9)) if len(hits) else 0
    counts = np.zeros(n_bins, dtype=np.int64)
    if len(hits) and n_bins:
        edges = bin_width * np.arange(1, n_bins + 1)
        idx = np.searchsorted(edges, hits, side="left")
        np.clip(idx, 0, n_bins - 1, out=idx)
        np.add.at(counts, idx, 1)
    return ArrivalHistogram(bin_width=bin_width, counts=counts, t0=0.0)


def empirical_fraction(records: HitRecordSet, t: float) -> float:
    """Fraction of released molecules absorbed by time ``t``.

    Estimator of the analytic cumulative fraction; ``t`` must lie within
    the simulated horizon.
    """
    if math.isnan(t) or not (0.0 <= t <= records.horizon):
        raise ValueError(f"t={t!r} outside simulated range [0, {records.horizon}]")
    return float(np.count_nonzero(records.hit_times <= t)) / records.n_released


def write_hits_csv(records: HitRecordSet, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("hit_time_s\n")
        for t in records.hit_times:
            fh.write(f"{t:.17g}\n")


def write_histogram_csv(hist: ArrivalHistogram, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_start_s,count\n")
        starts = hist.bin_starts
        for k in range(len(hist.counts)):
            fh.write(f"{starts[k]:.17g},{int(hist.counts[k])}\n")

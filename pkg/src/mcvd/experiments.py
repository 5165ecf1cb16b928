"""Named desk-scale experiments and their CSV artifacts.

Each experiment reproduces one published-figure-style sweep: it resolves a
flat parameter table (defaults first, overrides on top), drives the channel
model, particle simulator, link layer, or capacity search, and writes CSV
files plus a ``manifest.json`` holding the configuration echo, library
version, wall time, and per-file checksums — enough to bit-reproduce the run
with the same build.

Conventions shared by every experiment:

* lengths in micrometers, times in seconds, rates in 1/s;
* ``half_life = inf`` means no degradation;
* CSV files are comma-separated with a header row, LF line endings, and
  17 significant digits for reals so 64-bit floats round-trip;
* all randomness descends from the run seed through fixed-purpose
  substreams, so results do not depend on worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from . import __version__
from .arrivals import CountModel, count_cdf, ks_distance
from .channel import (
    ChannelSpec,
    degradation_rate_from_half_life,
    hitting_fraction,
    hitting_fraction_total,
    hitting_rate,
    isi_fraction,
    peak_amplitude,
    peak_time,
)
from .link import (
    Convergence,
    LinkConfig,
    build_response_table,
    error_probs_for_taus,
    simulate_link,
)
from .metrics import (
    ber,
    capacity,
    capacity_at_ts,
    default_symbol_time_grid,
    response_table_with_fallback,
    roc_curve,
)
from .simulate import SimConfig, bin_hits, simulate_burst


class ConfigError(ValueError):
    """A config that names an unknown experiment/key or violates an invariant."""


# Monte Carlo budgets: the sweep budget drives threshold/capacity searches at
# desk scale; the reference budget is used where a single curve is the whole
# point of the figure and extra sequences are cheap.
SWEEP_CONVERGENCE = Convergence(n_sequences=16, z_max=500, tol=1e-5)
REFERENCE_CONVERGENCE = Convergence(n_sequences=64, z_max=2000, tol=1e-5)


def resolve_worker_count() -> int:
    """Worker processes to use: all cores, capped by ``MCVD_THREADS``."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("MCVD_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ConfigError(f"MCVD_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ConfigError(f"MCVD_THREADS must be positive, got {cap}")
        return max(1, min(cpus, cap))
    return cpus


def child_seed(seed: int, stream: int) -> int:
    """Stable 64-bit sub-seed for an independent purpose-keyed stream."""
    return int(np.random.SeedSequence((seed, stream)).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# CSV and manifest plumbing
# ---------------------------------------------------------------------------


def format_value(value) -> str:
    """One CSV cell: integers verbatim, reals with 17 significant digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header: list[str], rows) -> int:
    """Write rows under a header; returns the number of data rows."""
    n = 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row width {len(row)} != header width {len(header)}")
            fh.write(",".join(format_value(v) for v in row) + "\n")
            n += 1
    return n


@dataclass(frozen=True)
class OutputRecord:
    """One emitted file: name relative to the output directory, hash, rows."""

    file: str
    sha256: str
    rows: int


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce and verify one experiment run."""

    experiment: str
    version: str
    seed: int
    parameters: Mapping[str, object]
    wall_time_s: float
    outputs: tuple[OutputRecord, ...]

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "version": self.version,
            "seed": self.seed,
            "parameters": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.parameters.items()},
            "wall_time_s": self.wall_time_s,
            "outputs": [vars(o) for o in self.outputs],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        data = json.loads(text)
        params = {k: tuple(v) if isinstance(v, list) else v
                  for k, v in data["parameters"].items()}
        return RunManifest(
            experiment=data["experiment"],
            version=data["version"],
            seed=int(data["seed"]),
            parameters=params,
            wall_time_s=float(data["wall_time_s"]),
            outputs=tuple(OutputRecord(**o) for o in data["outputs"]),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunManifest):
            return NotImplemented
        return (
            self.experiment == other.experiment
            and self.version == other.version
            and self.seed == other.seed
            and dict(self.parameters) == dict(other.parameters)
            and self.wall_time_s == other.wall_time_s
            and self.outputs == other.outputs
        )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# experiment registry and config resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    """A named runnable sweep with its flat default parameter table."""

    name: str
    summary: str
    defaults: Mapping[str, object]
    runner: Callable[[Mapping[str, object], int, Path], list[Path]]


def _coerce(name: str, raw, default):
    """Convert an override (possibly a string) to the default's type."""
    if isinstance(default, tuple):
        if isinstance(raw, str):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
        elif isinstance(raw, (list, tuple, np.ndarray)):
            parts = list(raw)
        else:
            parts = [raw]
        try:
            return tuple(float(p) for p in parts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"{name} must be a comma-separated list of reals, got {raw!r}"
            ) from exc
    if isinstance(default, (int, np.integer)) and not isinstance(default, bool):
        try:
            value = float(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc
        if not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {raw!r}")
        return int(value)
    try:
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a real number, got {raw!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved run request: experiment, parameters, seed, out dir.

    ``overrides`` may hold strings (from ``--set key=value`` or a config
    file); they are coerced to the type of the experiment's default for
    that key. Unknown keys are rejected.
    """

    experiment: str
    overrides: Mapping[str, object] = None
    seed: int = 0
    out_dir: Path = Path(".")

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            known = ", ".join(sorted(EXPERIMENTS))
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; expected one of: {known}"
            )
        defaults = EXPERIMENTS[self.experiment].defaults
        raw = dict(self.overrides or {})
        params = dict(defaults)
        for key, value in raw.items():
            if key not in defaults:
                known = ", ".join(sorted(defaults))
                raise ConfigError(
                    f"unknown key {key!r} for {self.experiment}; known keys: {known}"
                )
            params[key] = _coerce(key, value, defaults[key])
        object.__setattr__(self, "overrides", MappingProxyType(dict(raw)))
        object.__setattr__(self, "_params", MappingProxyType(params))
        if not isinstance(self.seed, (int, np.integer)) or not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    @property
    def params(self) -> Mapping[str, object]:
        return self._params


def _channel(params: Mapping[str, object], half_life: float, distance=None) -> ChannelSpec:
    lam = degradation_rate_from_half_life(half_life)
    d = float(params["distance"]) if distance is None else float(distance)
    r_r = float(params["r_r"])
    return ChannelSpec(r_r=r_r, r_0=r_r + d, D=float(params["D"]), lam=lam)


# ---------------------------------------------------------------------------
# validation (diagnostics without running)
# ---------------------------------------------------------------------------


def validate(config: ExperimentConfig) -> list[str]:
    """All invariant violations ("error: ...") and regime warnings ("warning: ...")."""
    p = config.params
    out: list[str] = []

    def check_positive(key: str, allow_zero: bool = False):
        if key not in p:
            return None
        v = float(p[key])
        ok = v >= 0 if allow_zero else v > 0
        if math.isnan(v) or not ok:
            bound = "nonnegative" if allow_zero else "positive"
            out.append(f"error: {key} must be {bound}, got {v!r}")
            return None
        return v

    r_r = check_positive("r_r")
    D = check_positive("D")

    half_lives = []
    if "half_life" in p:
        half_lives = [float(p["half_life"])]
    elif "half_lives" in p:
        half_lives = [float(h) for h in p["half_lives"]]
    for hl in half_lives:
        try:
            degradation_rate_from_half_life(hl)
        except ValueError as exc:
            out.append(f"error: {exc}")

    distances = []
    if "distance" in p:
        distances = [float(p["distance"])]
    elif "distances" in p:
        distances = [float(d) for d in p["distances"]]
    elif "d_min" in p:
        d_min, d_max, d_step = (float(p[k]) for k in ("d_min", "d_max", "d_step"))
        if d_step <= 0:
            out.append(f"error: d_step must be positive, got {d_step!r}")
        if d_min > d_max:
            out.append(f"error: d_min {d_min!r} must not exceed d_max {d_max!r}")
        distances = [d_min, d_max]
    for d in distances:
        if r_r is None or D is None:
            break
        try:
            ChannelSpec(r_r=r_r, r_0=r_r + d, D=D, lam=0.0)
        except ValueError as exc:
            out.append(f"error: {exc}")

    step_dt = check_positive("step_dt")
    if step_dt is not None and r_r is not None and D is not None:
        rms = math.sqrt(2.0 * D * step_dt)
        threshold = r_r / 10.0
        if rms >= threshold:
            out.append(
                f"warning: step_dt={step_dt:g} gives RMS per-coordinate step "
                f"{rms:.3g} um, not small against r_r/10={threshold:.3g} um; "
                "absorption may be under-detected at step ends"
            )
    if "horizon" in p and step_dt is not None:
        if float(p["horizon"]) < step_dt:
            out.append(
                f"error: horizon {p['horizon']!r} must be at least step_dt {step_dt!r}"
            )

    check_positive("t_s")
    check_positive("bin_width")
    check_positive("window")
    check_positive("t_step")
    check_positive("t_max")
    check_positive("ts_step")
    for key in ("ts_min", "ts_max"):
        check_positive(key)
    if "ts_min" in p and "ts_max" in p and float(p["ts_min"]) > float(p["ts_max"]):
        out.append(f"error: ts_min {p['ts_min']!r} must not exceed ts_max {p['ts_max']!r}")
    if "ts_values" in p:
        for v in p["ts_values"]:
            if not (float(v) > 0):
                out.append(f"error: ts_values entries must be positive, got {v!r}")

    for key in ("n_molecules", "replications", "n1", "n_bits"):
        if key in p and int(p[key]) < 1:
            out.append(f"error: {key} must be a positive integer, got {p[key]!r}")
    for key in ("n0", "tau", "tau_max"):
        if key in p and int(p[key]) < 0:
            out.append(f"error: {key} must be nonnegative, got {p[key]!r}")

    if "pi1" in p:
        pi1 = float(p["pi1"])
        if not (pi1 == -1.0 or 0.0 <= pi1 <= 1.0):
            out.append(
                f"error: pi1 must lie in [0, 1] (or -1 to optimize the prior), got {pi1!r}"
            )

    for lo_key, hi_key in (("window1_start", "window1_end"), ("window2_start", "window2_end")):
        if lo_key in p and hi_key in p:
            lo, hi = float(p[lo_key]), float(p[hi_key])
            if math.isnan(lo) or lo < 0:
                out.append(f"error: {lo_key} must be nonnegative, got {lo!r}")
            if not hi > lo:
                out.append(f"error: {hi_key} must exceed {lo_key}, got {lo!r} >= {hi!r}")

    return out


# ---------------------------------------------------------------------------
# individual experiment runners
# ---------------------------------------------------------------------------


def _run_fig1(params, seed, out_dir: Path) -> list[Path]:
    """First-hit histogram from the particle simulator next to the model curve."""
    n = int(params["n_molecules"])
    bin_width = float(params["bin_width"])
    horizon = float(params["horizon"])
    n_bins = int(round(horizon / bin_width))
    workers = resolve_worker_count()
    rows = []
    for k, hl in enumerate(params["half_lives"]):
        spec = _channel(params, hl)
        sim = SimConfig(
            channel=spec,
            n_molecules=n,
            step_dt=float(params["step_dt"]),
            horizon=horizon,
            seed=child_seed(seed, k),
        )
        records = simulate_burst(sim, n_workers=workers)
        hist = bin_hits(records, bin_width, n_bins=n_bins)
        edges = bin_width * np.arange(n_bins + 1)
        expected = n * np.diff(hitting_fraction(spec, edges))
        for i in range(n_bins):
            rows.append(
                (hl, edges[i], edges[i + 1], int(hist.counts[i]), expected[i])
            )
    path = out_dir / "hitmap.csv"
    write_csv(path, ["half_life", "t_lo", "t_hi", "simulated", "expected"], rows)
    return [path]


def _fig2_replication_counts(args) -> tuple:
    """Hits of one independent burst inside each window (process-pool unit)."""
    sim, windows = args
    records = simulate_burst(sim, n_workers=1)
    hits = records.hit_times
    return tuple(
        int(np.count_nonzero((hits > lo) & (hits <= hi))) for lo, hi in windows
    )


def _run_fig2(params, seed, out_dir: Path) -> list[Path]:
    """Arrival-count distribution in two windows against three count models."""
    spec = _channel(params, float(params["half_life"]))
    n = int(params["n_molecules"])
    reps = int(params["replications"])
    windows = [
        (float(params["window1_start"]), float(params["window1_end"])),
        (float(params["window2_start"]), float(params["window2_end"])),
    ]
    horizon = max(hi for _, hi in windows)
    sims = [
        (
            SimConfig(
                channel=spec,
                n_molecules=n,
                step_dt=float(params["step_dt"]),
                horizon=horizon,
                seed=child_seed(seed, rep),
            ),
            windows,
        )
        for rep in range(reps)
    ]
    workers = resolve_worker_count()
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_fig2_replication_counts, sims, chunksize=8))
    else:
        counts = [_fig2_replication_counts(s) for s in sims]
    counts = np.asarray(counts, dtype=np.int64)

    count_rows = []
    cdf_rows = []
    fit_rows = []
    for w, (lo, hi) in enumerate(windows):
        samples = counts[:, w]
        for rep in range(reps):
            count_rows.append((lo, hi, rep, int(samples[rep])))
        p_window = float(hitting_fraction(spec, hi) - hitting_fraction(spec, lo))
        models = {
            "binomial": CountModel.binomial(n, p_window),
            "poisson": CountModel.poisson(n * p_window),
            "gaussian": CountModel.gaussian(n, p_window),
        }
        mean = n * p_window
        sigma = math.sqrt(n * p_window * (1.0 - p_window))
        k_lo = max(0, min(int(samples.min()), int(mean - 6 * sigma)))
        k_hi = max(int(samples.max()), int(math.ceil(mean + 6 * sigma)))
        ks = np.arange(k_lo, k_hi + 1)
        model_cdfs = {name: count_cdf(m, ks) for name, m in models.items()}
        empirical = np.searchsorted(np.sort(samples), ks, side="right") / reps
        for i, k in enumerate(ks):
            cdf_rows.append(
                (
                    lo,
                    hi,
                    int(k),
                    empirical[i],
                    model_cdfs["binomial"][i],
                    model_cdfs["poisson"][i],
                    model_cdfs["gaussian"][i],
                )
            )
        for name, model in models.items():
            fit_rows.append((lo, hi, name, ks_distance(samples, model)))

    paths = [out_dir / "counts.csv", out_dir / "arrival_cdf.csv", out_dir / "fit.csv"]
    write_csv(paths[0], ["window_start", "window_end", "replication", "count"], count_rows)
    write_csv(
        paths[1],
        [
            "window_start",
            "window_end",
            "count",
            "empirical_cdf",
            "binomial_cdf",
            "poisson_cdf",
            "gaussian_cdf",
        ],
        cdf_rows,
    )
    write_csv(paths[2], ["window_start", "window_end", "model", "ks_distance"], fit_rows)
    return paths


def _run_fig4(params, seed, out_dir: Path) -> list[Path]:
    """Error probabilities across thresholds: count model, Gaussian variant, simulation."""
    spec = _channel(params, float(params["half_life"]))
    t_s = float(params["t_s"])
    table = build_response_table(spec, t_s)
    taus = list(range(0, int(params["tau_max"]) + 1))
    rows = []
    for model in ("poisson", "gaussian"):
        cfg = LinkConfig(
            channel=spec,
            t_s=t_s,
            n1=int(params["n1"]),
            n0=int(params["n0"]),
            tau=0,
            priors=(1.0 - float(params["pi1"]), float(params["pi1"])),
            K=table.K,
        )
        profiles = error_probs_for_taus(
            cfg, taus, convergence=REFERENCE_CONVERGENCE, seed=seed, table=table, model=model
        )
        for tau, prof in zip(taus, profiles):
            rows.append((tau, prof.pe0, prof.pe1, prof.pe, model))
    n_bits = int(params["n_bits"])
    for tau in taus:
        cfg = LinkConfig(
            channel=spec,
            t_s=t_s,
            n1=int(params["n1"]),
            n0=int(params["n0"]),
            tau=tau,
            priors=(1.0 - float(params["pi1"]), float(params["pi1"])),
            K=table.K,
        )
        result = simulate_link(cfg, n_bits, seed=seed, table=table)
        prof = result.profile
        rows.append((tau, prof.pe0, prof.pe1, prof.pe, "simulation"))
    path = out_dir / "pe.csv"
    write_csv(path, ["tau", "pe0", "pe1", "pe", "source"], rows)
    return [path]


def _distance_grid(params) -> np.ndarray:
    d_min, d_max, d_step = (float(params[k]) for k in ("d_min", "d_max", "d_step"))
    n = int(math.floor((d_max - d_min) / d_step + 1e-9))
    return d_min + d_step * np.arange(n + 1)


def _run_fig5(params, seed, out_dir: Path) -> list[Path]:
    """Absorption-rate peak time against distance, one curve per half-life."""
    rows = []
    for hl in params["half_lives"]:
        for d in _distance_grid(params):
            spec = _channel(params, hl, distance=d)
            rows.append((hl, d, peak_time(spec)))
    path = out_dir / "peak_time.csv"
    write_csv(path, ["half_life", "distance", "t_peak"], rows)
    return [path]


def _run_fig6(params, seed, out_dir: Path) -> list[Path]:
    """Peak arrival count in a narrow window against distance (path loss)."""
    rows = []
    for hl in params["half_lives"]:
        for d in _distance_grid(params):
            spec = _channel(params, hl, distance=d)
            amp = peak_amplitude(spec, float(params["n"]), float(params["window"]))
            rows.append((hl, d, amp))
    path = out_dir / "peak_amp.csv"
    write_csv(path, ["half_life", "distance", "n_peak"], rows)
    return [path]


def _run_fig7(params, seed, out_dir: Path) -> list[Path]:
    """Detection-vs-false-alarm trade-off per (symbol time, half-life) pair."""
    taus = list(range(0, int(params["tau_max"]) + 1))
    paths = []
    for t_s in params["ts_values"]:
        for hl in params["half_lives"]:
            spec = _channel(params, hl)
            table = build_response_table(spec, float(t_s))
            cfg = LinkConfig(
                channel=spec,
                t_s=float(t_s),
                n1=int(params["n1"]),
                n0=int(params["n0"]),
                tau=0,
                K=table.K,
            )
            curve = roc_curve(
                cfg, taus, convergence=SWEEP_CONVERGENCE, seed=seed, table=table
            )
            path = out_dir / f"roc_ts{float(t_s):g}_hl{float(hl):g}.csv"
            write_csv(
                path,
                ["tau", "pf", "pd"],
                [(t, pf, pd) for (pf, pd, t) in curve.points],
            )
            paths.append(path)
    return paths


def _run_fig8(params, seed, out_dir: Path) -> list[Path]:
    """Stray-molecule fraction over time, one curve per half-life."""
    t_step = float(params["t_step"])
    n = int(round(float(params["t_max"]) / t_step))
    times = t_step * np.arange(n + 1)
    rows = []
    for hl in params["half_lives"]:
        spec = _channel(params, hl)
        values = isi_fraction(spec, times)
        for t, v in zip(times, values):
            rows.append((hl, t, v))
    path = out_dir / "itr.csv"
    write_csv(path, ["half_life", "t", "itr"], rows)
    return [path]


def _symbol_time_steps(params) -> np.ndarray:
    ts_min, ts_max, ts_step = (float(params[k]) for k in ("ts_min", "ts_max", "ts_step"))
    n = int(math.floor((ts_max - ts_min) / ts_step + 1e-9))
    return ts_min + ts_step * np.arange(n + 1)


def _run_fig9(params, seed, out_dir: Path) -> list[Path]:
    """Best-threshold error rate against symbol time, one curve per half-life."""
    rows = []
    for hl in params["half_lives"]:
        spec = _channel(params, hl)
        for t_s in _symbol_time_steps(params):
            table = response_table_with_fallback(spec, float(t_s))
            cfg = LinkConfig(
                channel=spec,
                t_s=float(t_s),
                n1=int(params["n1"]),
                n0=int(params["n0"]),
                tau=0,
                K=table.K,
            )
            value, tau_star = ber(cfg, convergence=SWEEP_CONVERGENCE, seed=seed, table=table)
            rows.append((t_s, hl, value, tau_star))
    path = out_dir / "ber.csv"
    write_csv(path, ["ts", "half_life", "ber", "tau_star"], rows)
    return [path]


def _fixed_prior(params):
    pi1 = float(params["pi1"])
    return None if pi1 == -1.0 else pi1


def _run_fig10(params, seed, out_dir: Path) -> list[Path]:
    """Capacity against symbol time at one distance, one curve per half-life."""
    rows = []
    d = float(params["distance"])
    for hl in params["half_lives"]:
        spec = _channel(params, hl)
        for t_s in default_symbol_time_grid():
            r = capacity_at_ts(
                spec,
                int(params["n1"]),
                float(t_s),
                n0=int(params["n0"]),
                convergence=SWEEP_CONVERGENCE,
                seed=seed,
                fixed_prior=_fixed_prior(params),
            )
            rows.append((d, hl, r.c_bits, r.c_bps, r.tau, r.pi1, r.t_s))
    path = out_dir / "capacity.csv"
    write_csv(
        path,
        ["distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"],
        rows,
    )
    return [path]


def _run_fig11(params, seed, out_dir: Path) -> list[Path]:
    """Best capacity over the symbol-time grid per (distance, half-life) cell."""
    rows = []
    for d in params["distances"]:
        for hl in params["half_lives"]:
            spec = _channel(params, hl, distance=d)
            r = capacity(
                spec,
                int(params["n1"]),
                n0=int(params["n0"]),
                convergence=SWEEP_CONVERGENCE,
                seed=seed,
                fixed_prior=_fixed_prior(params),
            )
            rows.append((d, hl, r.c_bits, r.c_bps, r.tau, r.pi1, r.t_s))
    path = out_dir / "capacity.csv"
    write_csv(
        path,
        ["distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"],
        rows,
    )
    return [path]


def _run_custom(params, seed, out_dir: Path) -> list[Path]:
    """Single-point channel/link summary for ad-hoc parameter studies."""
    hl = float(params["half_life"])
    spec = _channel(params, hl)
    t_s = float(params["t_s"])
    table = response_table_with_fallback(spec, t_s)
    tau = int(params["tau"])
    cfg = LinkConfig(
        channel=spec,
        t_s=t_s,
        n1=int(params["n1"]),
        n0=int(params["n0"]),
        tau=tau,
        K=table.K,
    )
    profile = error_probs_for_taus(
        cfg, [tau], convergence=SWEEP_CONVERGENCE, seed=seed, table=table
    )[0]
    best, tau_star = ber(cfg, convergence=SWEEP_CONVERGENCE, seed=seed, table=table)
    tp = peak_time(spec)
    row = (
        spec.r_r,
        spec.r_0,
        spec.D,
        hl,
        spec.lam,
        hitting_fraction_total(spec),
        tp,
        float(hitting_rate(spec, tp)),
        table.K,
        t_s,
        int(params["n1"]),
        int(params["n0"]),
        tau,
        profile.pe0,
        profile.pe1,
        profile.pe,
        best,
        tau_star,
    )
    path = out_dir / "summary.csv"
    write_csv(
        path,
        [
            "r_r",
            "r_0",
            "D",
            "half_life",
            "lam",
            "f_total",
            "t_peak",
            "peak_rate",
            "k_memory",
            "t_s",
            "n1",
            "n0",
            "tau",
            "pe0",
            "pe1",
            "pe",
            "ber",
            "tau_star",
        ],
        [row],
    )
    return [path]


_GEOMETRY = {"r_r": 10.0, "D": 79.4}

EXPERIMENTS: Mapping[str, Experiment] = {
    e.name: e
    for e in (
        Experiment(
            "fig1-hitmap",
            "first-hit time histogram: particle simulation vs. model, per half-life",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "n_molecules": 100_000,
                "step_dt": 1e-6,
                "horizon": 0.2,
                "bin_width": 1e-3,
                "half_lives": (math.inf, 0.128, 0.016),
            },
            _run_fig1,
        ),
        Experiment(
            "fig2-arrival",
            "arrival-count distribution in two windows vs. binomial/Poisson/Gaussian",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "half_life": math.inf,
                "n_molecules": 2000,
                "replications": 2000,
                "step_dt": 1e-3,
                "window1_start": 4.0,
                "window1_end": 4.2,
                "window2_start": 0.0,
                "window2_end": 0.4,
            },
            _run_fig2,
        ),
        Experiment(
            "fig4-pe-vs-tau",
            "error probabilities across thresholds: model, Gaussian variant, simulation",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "half_life": 0.016,
                "t_s": 0.06,
                "n1": 1000,
                "n0": 0,
                "pi1": 0.5,
                "tau_max": 50,
                "n_bits": 100_000,
            },
            _run_fig4,
        ),
        Experiment(
            "fig5-peak-time",
            "absorption-rate peak time vs. distance, per half-life",
            {
                **_GEOMETRY,
                "d_min": 1.0,
                "d_max": 50.0,
                "d_step": 1.0,
                "half_lives": (math.inf, 0.128, 0.064, 0.032, 0.016, 0.008),
            },
            _run_fig5,
        ),
        Experiment(
            "fig6-peak-amp",
            "peak arrival count in a narrow window vs. distance (path loss)",
            {
                **_GEOMETRY,
                "d_min": 1.0,
                "d_max": 50.0,
                "d_step": 1.0,
                "n": 1.0,
                "window": 1e-6,
                "half_lives": (math.inf, 0.128, 0.064, 0.032, 0.016, 0.008),
            },
            _run_fig6,
        ),
        Experiment(
            "fig7-roc",
            "detection vs. false alarm across thresholds, per (symbol time, half-life)",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "n1": 1000,
                "n0": 0,
                "tau_max": 400,
                "ts_values": (0.03, 0.04),
                "half_lives": (0.008, 0.016, 0.064, 0.128),
            },
            _run_fig7,
        ),
        Experiment(
            "fig8-itr",
            "stray-molecule (interference) fraction over time, per half-life",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "t_max": 0.2,
                "t_step": 1e-3,
                "half_lives": (0.016, 0.032, 0.064, 0.128, math.inf),
            },
            _run_fig8,
        ),
        Experiment(
            "fig9-ber",
            "best-threshold error rate vs. symbol time, per half-life",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "n1": 1000,
                "n0": 0,
                "ts_min": 0.01,
                "ts_max": 0.1,
                "ts_step": 0.005,
                "half_lives": (0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128),
            },
            _run_fig9,
        ),
        Experiment(
            "fig10-capacity-ts",
            "capacity vs. symbol time at one distance, per half-life",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "n1": 1000,
                "n0": 0,
                "pi1": -1.0,
                "half_lives": (0.001, 0.002, 0.004, 0.008, 0.016, 0.064, 0.128),
            },
            _run_fig10,
        ),
        Experiment(
            "fig11-capacity-distance",
            "best capacity over symbol times per (distance, half-life) cell",
            {
                **_GEOMETRY,
                "n1": 1000,
                "n0": 0,
                "pi1": -1.0,
                "distances": (1.0, 4.0, 16.0, 50.0),
                "half_lives": (0.0005, 0.008, 0.128, 1.024),
            },
            _run_fig11,
        ),
        Experiment(
            "custom",
            "single-point channel and link summary for ad-hoc parameters",
            {
                **_GEOMETRY,
                "distance": 4.0,
                "half_life": 0.016,
                "t_s": 0.06,
                "n1": 1000,
                "n0": 0,
                "tau": 13,
            },
            _run_custom,
        ),
    )
}


def run(config: ExperimentConfig) -> RunManifest:
    """Execute one experiment and write its CSVs plus ``manifest.json``.

    Raises ConfigError for invalid configurations (including validation
    errors), ConvergenceError if an inner Monte Carlo budget is exhausted,
    and OSError for output I/O failures.
    """
    diagnostics = validate(config)
    errors = [d.removeprefix("error: ") for d in diagnostics if d.startswith("error")]
    if errors:
        raise ConfigError("; ".join(errors))
    config.out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    files = EXPERIMENTS[config.experiment].runner(config.params, config.seed, config.out_dir)
    wall = time.perf_counter() - started
    outputs = []
    for path in files:
        with open(path) as fh:
            n_rows = sum(1 for _ in fh) - 1
        outputs.append(OutputRecord(file=path.name, sha256=_sha256(path), rows=n_rows))
    manifest = RunManifest(
        experiment=config.experiment,
        version=__version__,
        seed=config.seed,
        parameters=dict(config.params),
        wall_time_s=wall,
        outputs=tuple(outputs),
    )
    (config.out_dir / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest

"""Monte-Carlo sweeps over seeded channel draws, aggregated to CSV."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MODES, SCHEMES
from .channels import realize
from .config import SystemConfig, db_to_linear, dbm_to_watts
from .crb import crb_value
from .metrics import beampattern_db, max_radar_snr, radar_snr_lower_bound, sum_rate, transmit_beampattern
from .solvers import InfeasibleError

# sweep name -> (config field, value converter)
SWEEPS = {
    "Pt": ("Pt", float),
    "Pt_dBm": ("Pt", lambda x: float(dbm_to_watts(x))),
    "N": ("N", int),
    "Gamma_t": ("Gamma_t", float),
    "Gamma_t_dB": ("Gamma_t", lambda x: float(db_to_linear(x))),
    "eps_crb": ("eps_crb", float),
}
TRACE_SWEEPS = ("iterations", "beampattern")

SUMMARY_COLUMNS = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "trials",
    "sum_rate_mean",
    "sum_rate_stderr",
    "constraint_value_mean",
    "iterations_mean",
    "wall_ms_mean",
]
RAW_COLUMNS = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "trial",
    "seed",
    "status",
    "sum_rate",
    "constraint_value",
    "iterations",
    "wall_ms",
]
BEAMPATTERN_COLUMNS = ["angle_rad", "gain_linear", "gain_db"]
BEAMPATTERN_POINTS = 512


@dataclass
class ExperimentSpec:
    mode: str
    sweep: str
    values: list
    trials: int
    schemes: list
    out: Path
    seed_base: int = 0
    base: SystemConfig = field(default_factory=SystemConfig)
    raw: bool = False
    timing: bool = True
    workers: int = 1

    def __post_init__(self):
        self.out = Path(self.out)
        self.values = list(self.values or [])
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.sweep not in SWEEPS and self.sweep not in TRACE_SWEEPS:
            raise ValueError(f"unknown sweep variable {self.sweep!r}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ValueError(f"unknown schemes {unknown}; choose from {list(SCHEMES)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sweep in SWEEPS and not self.values:
            raise ValueError("sweep values are required")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")


@dataclass
class TrialResult:
    sweep_value: float
    scheme: str
    trial: int
    seed: int
    status: str
    sum_rate: float = np.nan
    constraint_value: float = np.nan
    iterations: int = 0
    wall_ms: float = 0.0
    rate_trace: list = field(default_factory=list)
    W: np.ndarray | None = None


def sensing_value(dv, ch, cfg: SystemConfig, mode) -> float:
    """Radar SNR bound (SNR mode) or CRB (CRB mode) recomputed from the design."""
    if mode == "crb":
        return crb_value(dv.W, dv.phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2)
    if dv.u is not None:
        return radar_snr_lower_bound(dv.W, dv.u, dv.phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
    return max_radar_snr(dv.W, dv.phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)


def run_trial(cfg: SystemConfig, mode, scheme, sweep_value, trial, seed) -> TrialResult:
    result = TrialResult(sweep_value=sweep_value, scheme=scheme, trial=trial, seed=seed, status="ok")
    cfg = cfg.with_(seed=seed)
    ch = realize(cfg)
    start = time.perf_counter()
    try:
        dv, trace = SCHEMES[scheme](cfg, ch, mode)
    except InfeasibleError:
        result.status = "infeasible"
        return result
    result.wall_ms = 1e3 * (time.perf_counter() - start)
    result.sum_rate = sum_rate(dv.W, dv.phi, ch, cfg.sigma_k2)
    result.constraint_value = sensing_value(dv, ch, cfg, mode)
    result.iterations = trace.iterations
    result.rate_trace = list(trace.sum_rate)
    result.W = dv.W
    if trace.flagged:
        result.status = "flagged"
    return result


def _configs(spec: ExperimentSpec):
    if spec.sweep in SWEEPS:
        name, conv = SWEEPS[spec.sweep]
        return [(v, spec.base.with_(**{name: conv(v)})) for v in spec.values]
    return [(0, spec.base)]


def _jobs(spec: ExperimentSpec):
    return [
        (cfg, spec.mode, scheme, value, t, spec.seed_base + t)
        for value, cfg in _configs(spec)
        for scheme in spec.schemes
        for t in range(spec.trials)
    ]


def _run_jobs(jobs, workers):
    if workers <= 1:
        return [run_trial(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, *zip(*jobs)))


def _fmt(x) -> str:
    return repr(float(x)) if np.isfinite(x) else "nan"


def _write_csv(path: Path, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _mean(values):
    values = [v for v in values if np.isfinite(v)]
    return float(np.mean(values)) if values else np.nan


def summary_rows(spec: ExperimentSpec, results):
    rows = []
    order = {s: i for i, s in enumerate(spec.schemes)}
    groups = {}
    for res in results:
        groups.setdefault((res.sweep_value, res.scheme), []).append(res)
    for (value, scheme), group in sorted(groups.items(), key=lambda kv: (kv[0][0], order[kv[0][1]])):
        good = [r for r in group if r.status != "infeasible"]
        rates = np.array([r.sum_rate for r in good])
        stderr = float(np.std(rates, ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
        wall = _mean([r.wall_ms for r in good]) if spec.timing else 0.0
        rows.append(
            [
                spec.sweep,
                _fmt(value),
                scheme,
                len(good),
                _fmt(_mean(rates)),
                _fmt(stderr if rates.size else np.nan),
                _fmt(_mean([r.constraint_value for r in good])),
                _fmt(_mean([r.iterations for r in good])),
                _fmt(wall),
            ]
        )
    return rows


def iteration_rows(spec: ExperimentSpec, results):
    """Mean sum rate after each outer iteration; finished runs hold their last value."""
    rows = []
    for scheme in spec.schemes:
        traces = [r.rate_trace for r in results if r.scheme == scheme and r.rate_trace]
        if not traces:
            continue
        length = max(len(t) for t in traces)
        padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces])
        wanted = [int(v) for v in spec.values] if spec.values else range(1, length + 1)
        for it in wanted:
            if not 1 <= it <= length:
                continue
            col = padded[:, it - 1]
            stderr = float(np.std(col, ddof=1) / np.sqrt(col.size)) if col.size > 1 else 0.0
            rows.append([spec.sweep, _fmt(it), scheme, col.size, _fmt(col.mean()), _fmt(stderr), "nan", _fmt(length), "0.0"])
    return rows


def beampattern_grid(points=BEAMPATTERN_POINTS):
    return np.linspace(-np.pi / 2, np.pi / 2, points)


def beampattern_rows(results):
    """Trial-averaged radiated power on the angle grid."""
    grid = beampattern_grid()
    gains = [transmit_beampattern(r.W, grid) for r in results if r.W is not None]
    if not gains:
        return []
    mean = np.mean(gains, axis=0)
    db = beampattern_db(mean)
    return [[_fmt(t), _fmt(g), _fmt(d)] for t, g, d in zip(grid, mean, db)]


def raw_path(out: Path) -> Path:
    return out.with_name(out.stem + "_raw" + out.suffix)


def beampattern_path(out: Path, scheme, n_schemes) -> Path:
    return out if n_schemes == 1 else out.with_name(f"{out.stem}_{scheme}{out.suffix}")


def run_experiment(spec: ExperimentSpec):
    """Run every (sweep value, scheme, trial) job and write the CSV; returns the trial results."""
    results = _run_jobs(_jobs(spec), spec.workers)
    results.sort(key=lambda r: (r.sweep_value, spec.schemes.index(r.scheme), r.trial))
    if spec.sweep == "beampattern":
        for scheme in spec.schemes:
            rows = beampattern_rows([r for r in results if r.scheme == scheme])
            _write_csv(beampattern_path(spec.out, scheme, len(spec.schemes)), BEAMPATTERN_COLUMNS, rows)
    elif spec.sweep == "iterations":
        _write_csv(spec.out, SUMMARY_COLUMNS, iteration_rows(spec, results))
    else:
        _write_csv(spec.out, SUMMARY_COLUMNS, summary_rows(spec, results))
    if spec.raw:
        rows = [
            [
                spec.sweep,
                _fmt(r.sweep_value),
                r.scheme,
                r.trial,
                r.seed,
                r.status,
                _fmt(r.sum_rate),
                _fmt(r.constraint_value),
                r.iterations,
                _fmt(r.wall_ms if spec.timing else 0.0),
            ]
            for r in results
        ]
        _write_csv(raw_path(spec.out), RAW_COLUMNS, rows)
    return results

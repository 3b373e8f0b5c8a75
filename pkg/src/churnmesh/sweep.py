"""Experiment orchestration: single runs, parameter sweeps, CSV emission.

A sweep point is the base configuration with axis values (and optional
coupling rules such as ``p_max = 2 * p_min``) applied; every replicate gets
its own derived seed

    derived = sm64(sm64(sm64(base_seed) + point_index) + replicate_index)

where sm64 is the splitmix64 mixing function, so any individual run can be
re-executed in isolation.  Replicates are the unit of parallelism; results
are aggregated after a deterministic sort, so output bytes do not depend on
worker count or completion order.

Per-step connectivity is evaluated at every churn step of the measurement
window (the connectivity fraction is defined over time steps); all other
quantities are measured every ``sample_interval`` steps on connected
snapshots, with skipped disconnected samples counted.
"""
from __future__ import annotations

import io
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .core import ConfigError, Params
from .engine import bootstrap, churn_step
from .metrics import (
    MetricsSample,
    connectivity_transform,
    degree_and_power_stats,
    distance_matrix,
    is_connected,
    power_efficiency_rho,
    robustness_deltas,
    _mean_and_max,
)
from .spectral import spectral_gap

_M64 = (1 << 64) - 1

# Optional (expensive) metric groups; degree, power and connectivity are
# always measured.
ALL_METRICS = frozenset({"distance", "rho", "spectral", "robustness"})

SWEEPABLE = ("q", "p_min", "p_max", "n_agents")

CSV_COLUMNS = [
    "model", "q", "n_agents", "p_min", "p_max", "delta", "seed", "replicates",
    "samples", "skipped", "phi", "neg_lg_one_minus_phi", "censored",
    "mean_degree", "se_degree", "mean_power", "se_power",
    "avg_distance", "se_avg_distance", "diameter", "se_diameter",
    "rho", "se_rho", "spectral_gap", "se_gap",
    "delta_avg_distance", "se_delta_avg_distance",
    "delta_diameter", "se_delta_diameter",
]


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_seed(base_seed, point_index, replicate_index):
    return splitmix64(splitmix64(splitmix64(base_seed & _M64) + point_index) + replicate_index)


@dataclass
class RunResult:
    """Time series and connectivity accounting for one replicate."""

    params: Params
    samples: list
    measured_steps: int
    connected_steps: int
    skipped: int


def _take_sample(state, step, metrics, metrics_rng, connected):
    net = state.net
    net.verify_ledger(reset=True)
    kbar, mean_p, min_p, max_p = degree_and_power_stats(net)
    sample = MetricsSample(
        step=step,
        mean_degree=kbar,
        mean_power=mean_p,
        min_power=min_p,
        max_power=max_p,
        connected=connected,
    )
    if not connected:
        return sample
    if "distance" in metrics or "robustness" in metrics:
        dist, _ = distance_matrix(net)
        sample.avg_distance, sample.diameter = _mean_and_max(dist)
    if "rho" in metrics:
        sample.rho = power_efficiency_rho(net)
    if "spectral" in metrics:
        spec_seed = splitmix64((state.params.seed & _M64) ^ (step + 1))
        sample.spectral_gap = spectral_gap(net, seed=spec_seed).gap
    if "robustness" in metrics and state.params.robustness_trials > 0:
        before = (sample.avg_distance, sample.diameter)
        dd, dm = robustness_deltas(
            net, metrics_rng, state.params.robustness_trials, before=before
        )
        sample.delta_avg_distance, sample.delta_diameter = dd, dm
    return sample


def run_single(params: Params, metrics=ALL_METRICS, keep_state=False):
    """Bootstrap, equilibrate, then measure; returns a RunResult.

    Measurement draws (robustness deletions, spectral start vectors) come
    from streams separate from the simulation stream, so the trajectory is
    identical whether or not metrics are collected.
    """
    params.validate()
    state = bootstrap(params)
    for _ in range(params.equil_steps):
        churn_step(state)
    metrics_rng = random.Random(splitmix64((params.seed & _M64) ^ 0xC0FFEE))
    samples = []
    connected_steps = 0
    skipped = 0
    for t in range(1, params.measure_steps + 1):
        churn_step(state)
        connected = is_connected(state.net)
        connected_steps += connected
        if t % params.sample_interval == 0:
            sample = _take_sample(state, t, metrics, metrics_rng, connected)
            samples.append(sample)
            if not connected:
                skipped += 1
    result = RunResult(params, samples, params.measure_steps, connected_steps, skipped)
    if keep_state:
        return result, state
    return result


@dataclass
class SweepSpec:
    """A base configuration plus one or two swept axes with explicit values."""

    base: Params
    axes: list = field(default_factory=list)  # [(name, [values])], at most 2
    replicates: int = 1
    couplings: list = field(default_factory=list)  # [(target, factor, source)]
    metrics: frozenset = ALL_METRICS

    def validate(self):
        if len(self.axes) > 2:
            raise ConfigError("at most two sweep axes")
        for name, values in self.axes:
            if name not in SWEEPABLE:
                raise ConfigError(f"cannot sweep over {name!r}")
            if not values:
                raise ConfigError(f"empty value list for axis {name!r}")
        for target, _factor, source in self.couplings:
            if target not in SWEEPABLE or source not in SWEEPABLE:
                raise ConfigError("couplings may only involve sweepable fields")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        self.base.validate()
        return self

    def points(self):
        """Point parameter sets in deterministic order (first axis outer)."""
        if not self.axes:
            grids = [()]
        elif len(self.axes) == 1:
            grids = [((self.axes[0][0], v),) for v in self.axes[0][1]]
        else:
            (n0, v0), (n1, v1) = self.axes
            grids = [((n0, a), (n1, b)) for a in v0 for b in v1]
        out = []
        for assignment in grids:
            kw = {name: (int(v) if name == "n_agents" else float(v)) for name, v in assignment}
            p = replace(self.base, **kw)
            for target, factor, source in self.couplings:
                p = replace(p, **{target: factor * getattr(p, source)})
            out.append(p.validate())
        return out


def _run_job(args):
    params, metrics = args
    try:
        return run_single(params, metrics=metrics)
    except Exception as exc:  # recorded by the caller, not fatal to the sweep
        return exc


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list  # one dict per point, CSV_COLUMNS keys
    errors: list  # (point_index, replicate_index, message)


def _mean_se(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(len(arr)))


def _aggregate_point(params, base_seed, replicates, results):
    samples = [s for r in results for s in r.samples]
    connected_samples = [s for s in samples if s.connected]
    measured = sum(r.measured_steps for r in results)
    connected_steps = sum(r.connected_steps for r in results)
    row = {
        "model": params.model,
        "q": params.q,
        "n_agents": params.n_agents,
        "p_min": params.p_min,
        "p_max": params.p_max,
        "delta": params.delta,
        "seed": base_seed,
        "replicates": replicates,
        "samples": len(samples),
        "skipped": sum(r.skipped for r in results),
    }
    if measured > 0:
        phi = connected_steps / measured
        row["phi"] = phi
        value, censored = connectivity_transform(phi, measured)
        row["neg_lg_one_minus_phi"] = value
        row["censored"] = int(censored)
    else:
        row["phi"] = None
        row["neg_lg_one_minus_phi"] = None
        row["censored"] = None
    row["mean_degree"], row["se_degree"] = _mean_se([s.mean_degree for s in samples])
    row["mean_power"], row["se_power"] = _mean_se([s.mean_power for s in samples])
    for col, attr in (
        ("avg_distance", "avg_distance"),
        ("diameter", "diameter"),
        ("rho", "rho"),
        ("spectral_gap", "spectral_gap"),
        ("delta_avg_distance", "delta_avg_distance"),
        ("delta_diameter", "delta_diameter"),
    ):
        se_col = {
            "avg_distance": "se_avg_distance",
            "diameter": "se_diameter",
            "rho": "se_rho",
            "spectral_gap": "se_gap",
            "delta_avg_distance": "se_delta_avg_distance",
            "delta_diameter": "se_delta_diameter",
        }[col]
        row[col], row[se_col] = _mean_se([getattr(s, attr) for s in connected_samples])
    return row


def run_sweep(spec: SweepSpec, workers=1):
    """Run every (point, replicate) job and aggregate per point.

    Per-run failures are recorded in ``errors`` and excluded from the
    aggregation instead of aborting the sweep.
    """
    spec.validate()
    points = spec.points()
    jobs = []
    for pi, p in enumerate(points):
        for ri in range(spec.replicates):
            jobs.append(
                (pi, ri, replace(p, seed=derive_seed(spec.base.seed, pi, ri)))
            )
    outcomes = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (pi, ri, params), res in zip(
                jobs, pool.map(_run_job, [(p, spec.metrics) for _, _, p in jobs])
            ):
                outcomes[(pi, ri)] = res
    else:
        for pi, ri, params in jobs:
            outcomes[(pi, ri)] = _run_job((params, spec.metrics))
    rows, errors = [], []
    for pi, p in enumerate(points):
        results = []
        for ri in range(spec.replicates):
            res = outcomes[(pi, ri)]
            if isinstance(res, Exception):
                errors.append((pi, ri, f"{type(res).__name__}: {res}"))
            else:
                results.append(res)
        rows.append(_aggregate_point(p, spec.base.seed, spec.replicates, results))
    return SweepResult(spec, rows, errors)


# -- CSV ----------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv(result: SweepResult) -> str:
    """Deterministic CSV text: `#` header comments with the full config,
    then one row per sweep point."""
    spec = result.spec
    buf = io.StringIO()
    buf.write("# churnmesh sweep\n")
    for f in fields(Params):
        buf.write(f"# base.{f.name} {getattr(spec.base, f.name)}\n")
    for name, values in spec.axes:
        buf.write(f"# axis.{name} {','.join(_fmt(float(v)) for v in values)}\n")
    for target, factor, source in spec.couplings:
        buf.write(f"# couple.{target} {_fmt(float(factor))}*{source}\n")
    buf.write(f"# replicates {spec.replicates}\n")
    buf.write(f"# metrics {','.join(sorted(spec.metrics))}\n")
    buf.write("# derived_seed sm64(sm64(sm64(base_seed)+point_index)+replicate_index)\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in result.rows:
        buf.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def write_sweep_csv(result: SweepResult, path):
    with open(path, "w") as fh:
        fh.write(sweep_csv(result))

"""Command line interface.

Subcommands:
  simulate  one parameter point (optionally several replicates) -> CSV row
  sweep     run a sweep spec file -> CSV
  snapshot  run a single replicate and export the final network state
  analyze   recompute metrics from a snapshot file -> CSV row

Configuration is a flat ``key = value`` text file plus one canonical flag per
parameter; flags override the file.  Exit codes: 0 success, 1 configuration
error, 2 runtime invariant violation, 3 I/O error.
"""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import fields, replace

from .core import ConfigError, LedgerDriftError, Params
from .metrics import (
    DisconnectedError,
    connectivity_transform,
    degree_and_power_stats,
    distance_matrix,
    is_connected,
    power_efficiency_rho,
    robustness_deltas,
    _mean_and_max,
)
from .snapshot import CorruptSnapshotError, export_snapshot, import_snapshot
from .spectral import spectral_gap
from .sweep import (
    ALL_METRICS,
    CSV_COLUMNS,
    SweepSpec,
    _fmt,
    run_single,
    run_sweep,
    splitmix64,
    sweep_csv,
    write_sweep_csv,
)

_PARAM_KEYS = {f.name for f in fields(Params)}

_FLAG_TO_FIELD = {
    "model": "model",
    "q": "q",
    "n": "n_agents",
    "pmin": "p_min",
    "pmax": "p_max",
    "delta": "delta",
    "seed": "seed",
    "equil": "equil_steps",
    "measure": "measure_steps",
    "sample_interval": "sample_interval",
    "trials": "robustness_trials",
}


def parse_config_text(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out

_INT_FIELDS = {"n_agents", "seed", "equil_steps", "measure_steps",
               "sample_interval", "robustness_trials"}


def _coerce(name, raw):
    try:
        if name in _INT_FIELDS:
            return int(raw)
        if name == "model":
            return str(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def params_from(config, overrides):
    kwargs = {}
    for key, raw in config.items():
        if key in _PARAM_KEYS:
            kwargs[key] = _coerce(key, raw)
    kwargs.update(overrides)
    if "n_agents" not in kwargs:
        raise ConfigError("n_agents (--n) is required")
    try:
        return Params(**kwargs).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def sweep_spec_from(config, overrides, replicates=None, metrics=None):
    base = params_from({k: v for k, v in config.items() if k in _PARAM_KEYS}, overrides)
    axes = []
    couplings = []
    reps = replicates if replicates is not None else 1
    mets = metrics
    for key, raw in config.items():
        if key.startswith("axis."):
            name = key[5:]
            values = [float(v) for v in raw.split(",") if v.strip() != ""]
            axes.append((name, values))
        elif key.startswith("couple."):
            target = key[7:]
            if "*" not in raw:
                raise ConfigError(f"coupling {key} must look like '2 * p_min'")
            factor, source = raw.split("*", 1)
            couplings.append((target, float(factor), source.strip()))
        elif key == "replicates":
            if replicates is None:
                reps = int(raw)
        elif key == "metrics":
            if metrics is None:
                mets = frozenset(m.strip() for m in raw.split(",") if m.strip())
    if mets is None:
        mets = ALL_METRICS
    unknown = mets - ALL_METRICS
    if unknown:
        raise ConfigError(f"unknown metrics: {sorted(unknown)}")
    return SweepSpec(base=base, axes=axes, replicates=reps,
                     couplings=couplings, metrics=mets).validate()


def _add_param_flags(sp):
    sp.add_argument("--config", help="flat key = value configuration file")
    sp.add_argument("--model", choices=["A", "B"])
    sp.add_argument("--q", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--pmin", type=float)
    sp.add_argument("--pmax", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--equil", type=int)
    sp.add_argument("--measure", type=int)
    sp.add_argument("--sample-interval", dest="sample_interval", type=int)
    sp.add_argument("--trials", type=int)


def _overrides(args):
    out = {}
    for flag, name in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            out[name] = v
    return out


def _load_config(args):
    if args.config:
        with open(args.config) as fh:
            return parse_config_text(fh.read())
    return {}


def _metrics_arg(args):
    if args.metrics is None:
        return None
    return frozenset(m.strip() for m in args.metrics.split(",") if m.strip())


def build_parser():
    ap = argparse.ArgumentParser(prog="churnmesh")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one parameter point")
    _add_param_flags(sim)
    sim.add_argument("--replicates", type=int, default=1)
    sim.add_argument("--metrics", help="comma list from: distance,rho,spectral,robustness")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")

    sw = sub.add_parser("sweep", help="run a sweep spec file")
    _add_param_flags(sw)
    sw.add_argument("--replicates", type=int)
    sw.add_argument("--metrics")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", required=True)

    sn = sub.add_parser("snapshot", help="run one replicate and export the final state")
    _add_param_flags(sn)
    sn.add_argument("--out", required=True, help="snapshot file path")

    an = sub.add_parser("analyze", help="recompute metrics from a snapshot file")
    an.add_argument("--infile", "--in", dest="infile", required=True)
    an.add_argument("--trials", type=int, default=10)
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--out", default="-")
    return ap


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _cmd_simulate(args):
    config = _load_config(args)
    spec = sweep_spec_from(config, _overrides(args),
                           replicates=args.replicates, metrics=_metrics_arg(args))
    if spec.axes:
        raise ConfigError("simulate takes no sweep axes; use the sweep command")
    result = run_sweep(spec, workers=args.workers)
    _emit(sweep_csv(result), args.out)
    return 0


def _cmd_sweep(args):
    config = _load_config(args)
    if not args.config:
        raise ConfigError("sweep requires --config with axis.* entries")
    spec = sweep_spec_from(config, _overrides(args),
                           replicates=args.replicates, metrics=_metrics_arg(args))
    result = run_sweep(spec, workers=args.workers)
    _emit(sweep_csv(result), args.out)
    return 0


def _cmd_snapshot(args):
    config = _load_config(args)
    params = params_from(config, _overrides(args))
    _res, state = run_single(params, metrics=frozenset(), keep_state=True)
    export_snapshot(state, args.out)
    return 0


def _cmd_analyze(args):
    net, params = import_snapshot(args.infile)
    connected = is_connected(net)
    kbar, mean_p, _min_p, _max_p = degree_and_power_stats(net)
    row = {c: None for c in CSV_COLUMNS}
    row.update(
        model=params.model, q=params.q, n_agents=params.n_agents,
        p_min=params.p_min, p_max=params.p_max, delta=params.delta,
        seed=params.seed, replicates=1, samples=1,
        skipped=0 if connected else 1,
        phi=1.0 if connected else 0.0,
        mean_degree=kbar, se_degree=0.0, mean_power=mean_p, se_power=0.0,
    )
    row["neg_lg_one_minus_phi"], censored = connectivity_transform(row["phi"], 1)
    row["censored"] = int(censored)
    if connected:
        dist, _ = distance_matrix(net)
        row["avg_distance"], row["diameter"] = _mean_and_max(dist)
        row["se_avg_distance"] = row["se_diameter"] = 0.0
        row["rho"], row["se_rho"] = power_efficiency_rho(net), 0.0
        row["spectral_gap"] = spectral_gap(net, seed=splitmix64(args.seed)).gap
        row["se_gap"] = 0.0
        if args.trials > 0 and net.n_agents >= 3:
            rng = random.Random(splitmix64(args.seed ^ 0xC0FFEE))
            dd, dm = robustness_deltas(net, rng, args.trials,
                                       before=(row["avg_distance"], row["diameter"]))
            row["delta_avg_distance"], row["delta_diameter"] = dd, dm
            row["se_delta_avg_distance"] = row["se_delta_diameter"] = 0.0
    text = ",".join(CSV_COLUMNS) + "\n" + ",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n"
    _emit(text, args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "snapshot": _cmd_snapshot,
    "analyze": _cmd_analyze,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, CorruptSnapshotError, DisconnectedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LedgerDriftError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

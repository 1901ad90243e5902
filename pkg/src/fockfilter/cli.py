"""Command-line entry point: ``fockfilter <subcommand> --config FILE [--set k=v ...] --out DIR``.

All artifacts are deterministic functions of the configuration (and seed).
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bunching import bunch_chain
from .config import RunConfig, load_config
from .errors import ConfigError, FockFilterError
from .filtration import (
    FiltrationRecord,
    optimize_schedule,
    run_protocol,
    schedule_from_json,
    schedule_to_json,
)
from .fock import dephasing_channel, wigner_grid
from .gaussian import GaussianSpec, displaced_squeezed_thermal, superposition_theta
from .qng import (
    coherence_depth,
    coherence_measure,
    qng_depth,
    qng_report,
    qng_threshold_result,
    rqng_curve,
)
from .sensing import SensingTask, cfi_photon_counting
from .tmsv import TmsvSpec, tmsv_herald_fidelity, tmsv_herald_probability

log = logging.getLogger("fockfilter")

DISTRIBUTION_COLUMNS = ("n", "p_n")
RQNG_COLUMNS = ("eps", "threshold")
DEPTH_COLUMNS = (
    "round", "phi", "outcome", "success_probability", "cumulative_probability",
    "p_target", "p_above_target", "qng_depth", "rqng_depth",
)
WIGNER_COLUMNS = ("x", "p", "w")
SENSE_COLUMNS = ("magnitude", "cfi", "fock_reference")
TMSV_COLUMNS = ("lambda", "r", "probability", "fidelity")
SWEEP_COLUMNS = (
    "n_d", "n_s", "alpha", "r", "rounds", "success_probability",
    "p_target", "p_above_target", "status",
)

OUTPUTS_HELP = f"""\
outputs (CSV columns are stable):
  filter     record.json, schedule.json, qng_report.json, distribution.csv {DISTRIBUTION_COLUMNS}
  qng        threshold.json, rqng.csv {RQNG_COLUMNS}
  depth      depth.csv {DEPTH_COLUMNS}
  superpose  superposition.json, distribution.csv {DISTRIBUTION_COLUMNS}
  bunch      bunch.json, distribution.csv {DISTRIBUTION_COLUMNS}, wigner.csv {WIGNER_COLUMNS}
  sense      sense.csv {SENSE_COLUMNS}
  tmsv       tmsv.csv {TMSV_COLUMNS}
  sweep      sweep.csv {SWEEP_COLUMNS}

config file: one 'key = value' per line, '#' comments. Keys:
  {", ".join(RunConfig.keys())}
--set key=value overrides the file; dedicated flags override both.
The threshold cache defaults to $FOCKFILTER_CACHE or ~/.cache/fockfilter/thresholds.json.
exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""


# ------------------------------------------------------------------ output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if x is None or math.isnan(x) else f"{float(x):.12g}"
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- helpers

def _filtered(cfg: RunConfig, target_n: int | None = None) -> FiltrationRecord:
    target = cfg.target_n if target_n is None else target_n
    params = cfg.cavity
    state = displaced_squeezed_thermal(cfg.gaussian, cfg.dim)
    if cfg.schedule:
        try:
            schedule = schedule_from_json(Path(cfg.schedule).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load schedule {cfg.schedule}: {exc}") from None
    else:
        schedule = optimize_schedule(
            state, target, cfg.max_rounds, params, p_min=cfg.p_min,
            stop_threshold=cfg.stop_threshold, n_phases=cfg.n_phases,
        )
    between = None
    if cfg.dephasing > 0:
        between = lambda s: dephasing_channel(s, cfg.dephasing)  # noqa: E731
    return run_protocol(state, schedule, params, between=between, target_n=target)


def _thresholds(cfg: RunConfig, n: int):
    thr = qng_threshold_result(n, starts=cfg.starts, seed=cfg.seed, cache=cfg.cache, recompute=cfg.recompute)
    curve = rqng_curve(n, seed=cfg.seed, cache=cfg.cache, recompute=cfg.recompute)
    return thr, curve


# ------------------------------------------------------------ subcommands

def cmd_filter(cfg: RunConfig, out: Path) -> int:
    rec = _filtered(cfg)
    thr, curve = _thresholds(cfg, cfg.target_n)
    report = qng_report(rec.final_state, cfg.target_n, threshold=thr.value, curve=curve)
    record = rec.to_dict()
    record["input"] = cfg.input
    record["cavity"] = cfg.cavity.to_dict()
    write_json(out / "record.json", record)
    (out / "schedule.json").write_text(schedule_to_json([r for r, _ in rec.rounds]) + "\n")
    write_json(out / "qng_report.json", report.to_dict())
    p = rec.final_state.diagonal
    write_csv(out / "distribution.csv", DISTRIBUTION_COLUMNS, enumerate(p))
    return 0


def cmd_qng(cfg: RunConfig, out: Path) -> int:
    thr, curve = _thresholds(cfg, cfg.target_n)
    write_json(out / "threshold.json", {
        "n": thr.n, "dim": thr.dim, "value": thr.value, "spread": thr.spread,
        "seed": thr.seed, "starts": thr.starts, "params": thr.params,
        "assumption": curve.assumption,
    })
    eps = np.linspace(0, 1, 101)
    write_csv(out / "rqng.csv", RQNG_COLUMNS, zip(eps, curve.threshold(eps)))
    return 0


def cmd_depth(cfg: RunConfig, out: Path) -> int:
    rec = _filtered(cfg)
    n = cfg.target_n
    thr, curve = _thresholds(cfg, n)
    rows, cum = [], 1.0
    for i, ((rs, prob), st) in enumerate(zip(rec.rounds, rec.states), 1):
        cum *= prob
        p = st.diagonal
        rows.append((
            i, rs.phi, rs.outcome, prob, cum, p[n], p[n + 1:].sum(),
            qng_depth(st, n, threshold=thr.value),
            qng_depth(st, n, relative=True, curve=curve),
        ))
    write_csv(out / "depth.csv", DEPTH_COLUMNS, rows)
    return 0


def cmd_superpose(cfg: RunConfig, out: Path) -> int:
    from .filtration import filter_superposition_02

    g = cfg.gaussian
    alpha, r = float(np.real(g.alpha)), float(np.real(g.r))
    state, prob = filter_superposition_02(alpha, r, cfg.cavity, dim=cfg.superpose_dim)
    c02 = coherence_measure(state, 0, 2)
    write_json(out / "superposition.json", {
        "alpha": alpha, "r": r, "success_probability": prob,
        "theta": superposition_theta(alpha, r), "C02": c02,
        "coherence_depth": coherence_depth(state, cfg.coherence_threshold),
        "certified": c02 > cfg.coherence_threshold,
    })
    write_csv(out / "distribution.csv", DISTRIBUTION_COLUMNS, enumerate(state.diagonal))
    return 0


def cmd_bunch(cfg: RunConfig, out: Path) -> int:
    rec = _filtered(cfg)
    copy = rec.final_state.resized(cfg.bunch_dim)
    state, prob = bunch_chain([copy] * cfg.copies)
    n_out = cfg.copies * cfg.target_n
    thr, _ = _thresholds(cfg, n_out) if n_out < state.dim - 5 else (None, None)
    p = state.diagonal
    write_json(out / "bunch.json", {
        "copies": cfg.copies, "copy_target": cfg.target_n, "output_target": n_out,
        "copy_success_probability": rec.total_probability,
        "herald_probability": prob, "p_output_target": float(p[n_out]),
        "threshold": None if thr is None else thr.value,
        "above_threshold": None if thr is None else bool(p[n_out] > thr.value),
    })
    write_csv(out / "distribution.csv", DISTRIBUTION_COLUMNS, enumerate(p))
    xs = np.linspace(-6, 6, 61)
    W = wigner_grid(state, xs, xs)
    write_csv(out / "wigner.csv", WIGNER_COLUMNS,
              ((x, pp, W[j, i]) for j, pp in enumerate(xs) for i, x in enumerate(xs)))
    return 0


def cmd_sense(cfg: RunConfig, out: Path) -> int:
    rec = _filtered(cfg)
    m = cfg.target_n
    mags = np.logspace(np.log10(cfg.magnitude_min), np.log10(cfg.magnitude_max), cfg.points)
    rows = []
    for x in mags:
        F = cfi_photon_counting(rec.final_state, SensingTask(cfg.kind, float(x)))
        ref = (2 * m + 1) / x if cfg.kind == "displacement" else (m * m + m + 1) / (2 * x)
        rows.append((x, F, ref))
    write_csv(out / "sense.csv", SENSE_COLUMNS, rows)
    return 0


def cmd_tmsv(cfg: RunConfig, out: Path) -> int:
    beta = cfg.beta if cfg.tmsv_beta is None else cfg.tmsv_beta
    rows = []
    for lam in np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.points):
        try:
            spec = TmsvSpec(float(lam), beta, cfg.target_n, cfg.herald_efficiency)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows.append((lam, np.arctanh(lam), tmsv_herald_probability(spec), tmsv_herald_fidelity(spec)))
    write_csv(out / "tmsv.csv", TMSV_COLUMNS, rows)
    return 0


def _sweep_point(job):
    cfg, n_d, n_s = job
    alpha, r = math.sqrt(n_d), math.asinh(math.sqrt(n_s))
    cfg = RunConfig(**{**cfg.to_dict(), "input": f"{alpha!r},{r!r},0", "schedule": None})
    try:
        rec = _filtered(cfg)
    except FockFilterError as exc:
        return (n_d, n_s, alpha, r, 0, math.nan, math.nan, math.nan, type(exc).__name__)
    p = rec.final_state.diagonal
    n = cfg.target_n
    return (n_d, n_s, alpha, r, rec.n_rounds, rec.total_probability, p[n], p[n + 1:].sum(), "ok")


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    jobs = [
        (cfg, float(nd), float(ns))
        for nd in np.linspace(0, cfg.n_d_max, cfg.n_d_points)
        for ns in np.linspace(0, cfg.n_s_max, cfg.n_s_points)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    return 0


COMMANDS = {
    "filter": (cmd_filter, "filter a Gaussian input and certify the result"),
    "qng": (cmd_qng, "absolute and relative QNG thresholds for target_n"),
    "depth": (cmd_depth, "loss depths after every filtration round"),
    "superpose": (cmd_superpose, "single-round (|0> + |2>) filtration and coherence"),
    "bunch": (cmd_bunch, "bunch copies of the filtered state"),
    "sense": (cmd_sense, "photon-counting Fisher information of the filtered state"),
    "tmsv": (cmd_tmsv, "heralded TMSV probability and fidelity versus lambda"),
    "sweep": (cmd_sweep, "filtration over a grid of displacement and squeezing"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockfilter", description=__doc__.splitlines()[0],
        epilog=OUTPUTS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, epilog=OUTPUTS_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--cache", help="threshold cache file")
        p.add_argument("--recompute", action="store_true", help="ignore cached thresholds")
        p.add_argument("--workers", type=int, help="worker processes for sweep")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        if args.out:
            cfg.output_dir = args.out
        if args.cache:
            cfg.cache = args.cache
        if args.recompute:
            cfg.recompute = True
        if args.workers is not None:
            cfg.set("workers", str(args.workers))
            cfg.validate()
        out = Path(cfg.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from None
        return COMMANDS[args.command][0](cfg, out)
    except ConfigError as exc:
        print(f"fockfilter: configuration error: {exc}", file=sys.stderr)
        return 2
    except (FockFilterError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"fockfilter: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

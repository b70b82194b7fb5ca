from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence as Seq

import numpy as np

from .aht import (
    cpmg_closed_forms,
    cycle_defect,
    magnus0,
    magnus_terms,
    realization_hamiltonian,
    toggling_frame,
)
from .engine import PulseModel
from .errors import ConfigError, SpinEchoError
from .lattice import sample_realization
from .observables import Snapshot, export_snapshot
from .plan import (
    ConfigFile,
    RunConfig,
    list_presets,
    load_config,
    parse_assignment,
    select_runs,
)
from .platform import detect_runtime
from .result import CSV_COLUMNS, EnsembleResult
from .runner import (
    AnalyticJob,
    EnsembleJob,
    EnsembleRunner,
    RunnerConfig,
    split_seed,
)
from .spinops import MAX_SPINS, dipolar_hamiltonian, rotated_dipolar_ops

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

DEFECT_SCALES = (1.0, 0.5, 0.25)


def git_blob_sha1(data: bytes) -> str:
    """Content hash as ``git hash-object`` computes it."""
    h = hashlib.sha1(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def input_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    for ref in (cfg.sequence.dsl_file, cfg.lattice.file):
        if ref is not None:
            blob += Path(ref).read_bytes()
    return git_blob_sha1(blob)


def write_csv(result: EnsembleResult, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for index, *values in result.rows():
            w.writerow([str(index)] + ["%.17g" % v for v in values])


def write_json(payload: Dict[str, Any], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _metadata(cfg: RunConfig, command: str) -> Dict[str, Any]:
    return {
        "command": command,
        "run": cfg.name,
        "config": cfg.to_dict(),
        "input_sha1": input_hash(cfg),
        "runtime": detect_runtime().to_dict(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _sidecar(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def _runner(cfg: RunConfig) -> EnsembleRunner:
    return EnsembleRunner(RunnerConfig(workers=cfg.workers))


def _ensemble(cfg: RunConfig, model: PulseModel,
              snapshot_echoes: Seq[int] = ()):
    """Run ``cfg`` under ``model``; tau sweeps give one row per tau."""
    if cfg.disorder.n_spins > MAX_SPINS:
        raise ConfigError(
            f"{cfg.disorder.n_spins} spins exceed the exact-simulation "
            f"limit of {MAX_SPINS}; use the analytic command",
            "disorder.n_spins")
    spec = cfg.lattice.build()
    runner = _runner(cfg)
    outcomes = []
    for seq in cfg.sequence.sequences():
        job = EnsembleJob(spec, cfg.disorder, seq, model, cfg.detection,
                          cfg.interaction, tuple(snapshot_echoes))
        outcomes.append(runner.run(job, cfg.n_dr, cfg.master_seed))
    if len(outcomes) == 1:
        return outcomes[0].result, outcomes
    return EnsembleResult.concatenate(o.result for o in outcomes), outcomes


def _export_snapshots(cfg: RunConfig, row: str, snapshots: List[Snapshot],
                      out: Path) -> List[str]:
    written = []
    for snap in snapshots:
        base = out / (f"{cfg.name}_{row}_echo{snap.echo_index:04d}_"
                      f"{snap.realization}")
        json_path, ppm_path = export_snapshot(snap, base,
                                              cfg.output.threshold)
        written += [json_path.name, ppm_path.name]
    return written


def _check_schedule(cfg: RunConfig) -> None:
    if cfg.sequence.tau_values and cfg.output.snapshot_echoes:
        raise ConfigError("snapshots are not supported for tau sweeps",
                          "output.snapshot_echoes")
    n = cfg.sequence.build().n_echoes
    late = [e for e in cfg.output.snapshot_echoes if e > n]
    if late:
        raise ConfigError(f"echo(s) {late} beyond the last echo ({n})",
                          "output.snapshot_echoes")


def cmd_run(cfg: RunConfig, out: Path) -> Dict[str, Any]:
    _check_schedule(cfg)
    model = cfg.model.build()
    result, outcomes = _ensemble(cfg, model, cfg.output.snapshot_echoes)
    csv_path = out / cfg.csv_name
    write_csv(result, csv_path)

    snapshots = []
    if cfg.output.snapshot_echoes:
        o = outcomes[0]
        picked = [o.first[e] for e in sorted(o.first)]
        picked += [o.averaged[e] for e in sorted(o.averaged)]
        snapshots = _export_snapshots(cfg, model.label, picked, out)

    meta = _metadata(cfg, "run")
    meta.update({
        "csv": csv_path.name,
        "seeds": [str(s) for s in result.seeds],
        "n_realizations": result.n_realizations,
        "diagnostics": result.diagnostics,
        "elapsed_s": sum(o.elapsed_s for o in outcomes),
        "snapshots": snapshots,
    })
    write_json(meta, _sidecar(csv_path))
    logger.info("%s: wrote %s", cfg.name, csv_path)
    return meta


def cmd_analytic(cfg: RunConfig, out: Path) -> Dict[str, Any]:
    times = cfg.analytic.resolve()
    job = AnalyticJob(cfg.lattice.build(), cfg.disorder, times,
                      cfg.detection)
    result = _runner(cfg).run_analytic(job, cfg.n_dr, cfg.master_seed)
    csv_path = out / cfg.csv_name
    write_csv(result, csv_path)
    meta = _metadata(cfg, "analytic")
    meta.update({
        "csv": csv_path.name,
        "seeds": [str(s) for s in result.seeds],
        "n_realizations": result.n_realizations,
    })
    write_json(meta, _sidecar(csv_path))
    logger.info("%s: wrote %s", cfg.name, csv_path)
    return meta


def cmd_snapshot(cfg: RunConfig, out: Path) -> Dict[str, Any]:
    """Density-matrix frames for the delta and exact finite pulse models,
    single realization and ensemble average."""
    schedule = cfg.output.snapshot_echoes
    if not schedule:
        logger.info("%s: empty snapshot schedule, nothing to do", cfg.name)
        return {"run": cfg.name, "files": []}
    _check_schedule(cfg)
    if cfg.model.omega1_over_2pi is None:
        raise ConfigError("the exact-pulse rows need omega1_over_2pi",
                          "model.omega1_over_2pi")
    nominal = cfg.model.build()
    models = (
        ("delta", PulseModel.delta(nominal.angle_scale)),
        ("exact", PulseModel.exact_finite(nominal.omega1,
                                          nominal.angle_scale)),
    )
    files: List[str] = []
    for row, model in models:
        _, outcomes = _ensemble(cfg, model, schedule)
        o = outcomes[0]
        for e in sorted(o.first):
            files += _export_snapshots(cfg, row, [o.first[e]], out)
            files += _export_snapshots(cfg, row, [o.averaged[e]], out)
    meta = _metadata(cfg, "snapshot")
    meta["files"] = files
    write_json(meta, out / f"{cfg.name}_snapshots.json")
    logger.info("%s: wrote %d snapshot files", cfg.name, len(files))
    return meta


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.linalg.norm(b))
    diff = float(np.linalg.norm(a - b))
    return diff / scale if scale > 0 else diff


def aht_report(cfg: RunConfig) -> Dict[str, Any]:
    seq = cfg.sequence.build()
    seed = split_seed(cfg.master_seed, 0)
    realization = sample_realization(cfg.lattice.build(), cfg.disorder, seed)
    model = cfg.model.build()
    omega1 = model.omega1 if model.finite_pulses else math.inf
    frame = toggling_frame(seq.cycle, realization_hamiltonian(realization),
                           omega1)
    terms = magnus_terms(frame)
    report: Dict[str, Any] = {
        "run": cfg.name,
        "sequence": seq.name,
        "seed": str(seed),
        "n_spins": realization.n_spins,
        "omega1": None if math.isinf(omega1) else omega1,
        "unroll": frame.unroll,
        "t_c": frame.t_c,
        "intervals": [
            {"tag": iv.tag, "duration": iv.duration}
            for iv in frame.intervals
        ],
        "h0_norm": terms.h0.norm(),
        "h1_norm": terms.h1.norm(),
    }

    if seq.name == "CPMG" and math.isfinite(omega1):
        closed = cpmg_closed_forms(realization.couplings,
                                   realization.omega_z, cfg.sequence.tau,
                                   math.pi / omega1)
        report["closed_form_residuals"] = {
            "h0": _relative(terms.h0.matrix, closed.h0.matrix),
            "h1": _relative(terms.h1.matrix, closed.h1.matrix),
        }
    if seq.name == "ostroff_waugh":
        dipolar = toggling_frame(seq.cycle,
                                 dipolar_hamiltonian(realization.couplings),
                                 omega1)
        hyy = rotated_dipolar_ops(realization.couplings)[0].matrix
        report["half_yy_residual"] = _relative(magnus0(dipolar).matrix,
                                               -0.5 * hyy)

    table = []
    for scale in DEFECT_SCALES:
        scaled = realization.scaled(scale)
        table.append({
            "scale": scale,
            "defect_order0": cycle_defect(scaled, seq.cycle, omega1, 0),
            "defect_order1": cycle_defect(scaled, seq.cycle, omega1, 1),
        })
    report["defect_scaling"] = table
    return report


def cmd_aht(cfg: RunConfig, out: Path) -> Dict[str, Any]:
    report = aht_report(cfg)
    report.update(_metadata(cfg, "aht"))
    path = out / f"{cfg.name}_aht.json"
    write_json(report, path)
    logger.info("%s: wrote %s", cfg.name, path)
    return report


COMMANDS = {
    "run": cmd_run,
    "analytic": cmd_analytic,
    "snapshot": cmd_snapshot,
    "aht": cmd_aht,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, metavar="PATH|PRESET",
                   help="config file, or the name of a shipped preset")
    p.add_argument("--set", action="append", default=[], dest="overrides",
                   metavar="KEY=VALUE",
                   help="override a dotted config key (JSON value)")
    p.add_argument("--run", action="append", default=[], dest="runs",
                   metavar="NAME", help="only this configured run")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: from config)")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: from config)")
    p.add_argument("--out", type=Path, default=Path("."),
                   help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinecho",
        description="Exact spin-echo simulations of dipolar spin-1/2 "
                    "clusters under multiple-pi-pulse sequences.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--log-level", default="INFO",
                   choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "run": "ensemble echo trains to CSV",
        "aht": "average Hamiltonian report",
        "snapshot": "density-matrix frames (JSON + PPM)",
        "analytic": "flip-flop-dropped ensemble curves",
    }
    for name, text in helps.items():
        _common(sub.add_parser(
            name, help=text,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    sub.add_parser("list-presets", help="shipped configurations")
    check = sub.add_parser("check", help="fast acceptance checks")
    check.add_argument("--only", action="append", default=[],
                       metavar="NAME", help="only this check")
    check.add_argument("--verbose", action="store_true",
                       help="print the values every check measured")
    return p


def resolve_runs(args: argparse.Namespace) -> List[RunConfig]:
    config: ConfigFile = load_config(args.config)
    overrides = dict(parse_assignment(s) for s in args.overrides)
    runs = select_runs(config.with_overrides(overrides).resolve(),
                       args.runs)
    changes: Dict[str, Any] = {}
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.seed is not None:
        changes["master_seed"] = args.seed
    return [dataclasses.replace(r, **changes) for r in runs]


def _list_presets() -> int:
    for name in list_presets():
        print(f"{name:16s} {load_config(name).description}")
    return EXIT_OK


def _check(only: Seq[str], verbose: bool) -> int:
    from .acceptance import build_suite
    from .framework import ConsoleReporter

    report = build_suite().run(only)
    if ConsoleReporter(verbose).render(report):
        return EXIT_CHECKS_FAILED
    return EXIT_OK


def main(argv: Optional[Seq[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "list-presets":
            return _list_presets()
        if args.command == "check":
            return _check(args.only, args.verbose)
        command = COMMANDS[args.command]
        for cfg in resolve_runs(args):
            command(cfg, args.out)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except SpinEchoError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

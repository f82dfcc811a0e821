"""``ltae`` command line: synth, train, encode, track, compare, inspect.

stdout carries exactly one JSON document per invocation; diagnostics go to
stderr. Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric/divergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError
from .export import load_trajectory, save_svg, save_trajectory
from .signal import SynthesisSpec, load_recording, normalize, save_recording, synthesize
from .trainer import TrainConfig, load_checkpoint, save_checkpoint, train
from .trajectory import displacement, encode_sequence, kinematics, resting_manifold, separation, track

log = logging.getLogger("ltae")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc


def cmd_synth(args) -> dict:
    spec = SynthesisSpec.from_dict(_read_json(args.spec))
    if args.duration is not None:
        spec = dataclasses.replace(spec, duration_s=args.duration)
    if args.condition is not None:
        spec = dataclasses.replace(spec, condition=args.condition)
    rec = synthesize(spec, args.seed)
    save_recording(rec, args.out)
    return {
        "out": str(args.out),
        "n_frames": rec.n_frames,
        "n_channels": rec.n_channels,
        "sample_rate_hz": rec.sample_rate_hz,
        "condition": rec.condition,
    }


def cmd_train(args) -> dict:
    cfg_dict = _read_json(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "max_epochs": args.max_epochs,
        "penalty_weight": args.penalty_weight,
        "lr": args.lr,
        "batch_size": args.batch_size,
    }
    cfg_dict.update({k: v for k, v in overrides.items() if v is not None})
    cfg = TrainConfig.from_dict(cfg_dict)
    rec = load_recording(args.data, args.rate)

    log_path = Path(args.log) if args.log else Path(args.out).with_suffix(".log.jsonl")
    with open(log_path, "w") as fh:
        def on_epoch(r):
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
            log.info("epoch %d  mse %.3e  max dev %.3f deg", r.epoch, r.mse, r.max_angle_deviation_deg)

        model = train(rec, cfg, on_epoch=on_epoch)
    save_checkpoint(model, args.out)
    last = model.history[-1]
    return {
        "out": str(args.out),
        "log": str(log_path),
        "converged": model.converged,
        "epochs": len(model.history),
        "final_mse": last.mse,
        "max_angle_deviation_deg": last.max_angle_deviation_deg,
        "model_hash": model.content_hash(),
    }


def _write_matrix(path, header, M) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in M:
        w.writerow([repr(float(v)) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _encoded(model, path, rate):
    rec = load_recording(path, rate)
    return rec, encode_sequence(model, normalize(rec, model.stats))


def cmd_encode(args) -> dict:
    model = load_checkpoint(args.model)
    rec, Z = _encoded(model, args.data, args.rate)
    _write_matrix(args.out, [f"z{i}" for i in range(Z.shape[1])], Z)
    return {"out": str(args.out), "n_frames": int(Z.shape[0]), "latent_dim": int(Z.shape[1])}


def cmd_track(args) -> dict:
    model = load_checkpoint(args.model)
    manifold = resting_manifold(model, load_recording(args.resting, args.rate))
    task = load_recording(args.task, args.rate)
    tag = args.tag if args.tag is not None else (task.condition or Path(args.task).stem)
    traj = track(model, manifold, task, args.filter_ms, tag)
    disp = displacement(traj, manifold, args.displacement_mode)
    speed = kinematics(traj).speed if len(traj) >= 3 else None
    meta = {"model_hash": model.content_hash(), "displacement_mode": args.displacement_mode}
    save_trajectory(traj, args.out, disp, speed, meta)
    if args.svg:
        save_svg([traj], args.svg)
    return {
        "out": str(args.out),
        "n_samples": len(traj),
        "condition": tag,
        "filter_ms": args.filter_ms,
        "mean_displacement": float(disp.mean()),
        "model_hash": meta["model_hash"],
    }


def cmd_compare(args) -> dict:
    a, b = load_trajectory(args.traj_a), load_trajectory(args.traj_b)
    report = separation(a, b).to_dict()
    report.update({"condition_a": a.condition_tag, "condition_b": b.condition_tag})
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_inspect(args) -> dict:
    model = load_checkpoint(args.model)
    rep = model.final_report
    return {
        "spec": model.spec.to_dict(),
        "config": model.config.to_dict(),
        "converged": model.converged,
        "epochs": len(model.history),
        "final_mse": model.history[-1].mse if len(model.history) else None,
        "final_angles_deg": None if rep is None else [float(x) for x in rep.angles_deg],
        "max_angle_deviation_deg": None if rep is None else rep.max_deviation_deg,
        "model_hash": model.content_hash(),
    }


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ltae", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="synthesize a recording from a JSON spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--duration", type=float)
    s.add_argument("--condition")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train the autoencoder on a recording")
    s.add_argument("--data", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--log")
    s.add_argument("--rate", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--max-epochs", type=int)
    s.add_argument("--penalty-weight", type=float)
    s.add_argument("--lr", type=float)
    s.add_argument("--batch-size", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("encode", help="write the latent sequence of a recording")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--rate", type=float)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("track", help="3-D trajectory of a task recording relative to rest")
    s.add_argument("--model", required=True)
    s.add_argument("--resting", required=True)
    s.add_argument("--task", required=True)
    s.add_argument("--filter-ms", type=float, default=100.0)
    s.add_argument("--out", required=True)
    s.add_argument("--svg")
    s.add_argument("--tag")
    s.add_argument("--rate", type=float)
    s.add_argument("--displacement-mode", choices=("centroid", "nearest-point"), default="centroid")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("compare", help="separation report for two trajectories")
    s.add_argument("--traj-a", required=True)
    s.add_argument("--traj-b", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("inspect", help="summarize a checkpoint")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _emit(args.func(args))
    except NumericError as exc:
        print(f"ltae {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, KeyError) as exc:
        print(f"ltae {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

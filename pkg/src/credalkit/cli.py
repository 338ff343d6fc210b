"""Command-line pipeline: data generation through OOD evaluation.

Subcommands::

    gen-data        write a synthetic dataset CSV
    train-ensemble  train M seeded members, optionally dump their logits
    distill         train an ed/edd/ced student from members or an archive
    wrap            per-sample credal intervals + uncertainty from an archive
    eval            detection/calibration metrics for a model or archives
    oracle-check    entropy solvers vs the brute-force grid oracle

Exit codes: 0 success, 1 runtime failure (missing/invalid files, schema
violations), 2 usage errors.  Failures print one machine-readable line
``error: <code>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .archive import ArchiveError, ArchiveManifest, LogitArchive, format_float, read_archive, write_archive
from .config import ConfigError, parse_config
from .credal import InputValidationError, IntervalSystem, intersection_probability
from .datasets import gen_synthetic, load_dataset, save_dataset
from .entropy import (
    decompose_uncertainty,
    grid_oracle_entropy_bounds,
    lower_entropy,
    random_interval_system,
    upper_entropy,
)
from .heads import softmax
from .metrics import EnsemblePredictor, evaluate_archives, evaluate_model
from .persist import ARTIFACT_VERSION, load_model, save_model
from .train import MlpSpec, TrainConfig, distill, train_snn_ensemble

_CREATOR = f"credalkit/{ARTIFACT_VERSION}"

_TRAIN_DEFAULTS = TrainConfig()
_DEFAULT_HIDDEN = (64, 64)


def _merge_train_settings(args) -> dict:
    """Defaults < config file < explicit flags."""
    settings = {
        "epochs": _TRAIN_DEFAULTS.epochs,
        "batch_size": _TRAIN_DEFAULTS.batch_size,
        "learning_rate": _TRAIN_DEFAULTS.learning_rate,
        "lr_drop_epoch": _TRAIN_DEFAULTS.lr_drop_epoch,
        "lr_drop_factor": _TRAIN_DEFAULTS.lr_drop_factor,
        "temperature": _TRAIN_DEFAULTS.temperature,
        "optimizer": _TRAIN_DEFAULTS.optimizer,
        "seed": _TRAIN_DEFAULTS.seed,
        "weight_seed": 0,
        "hidden_dims": _DEFAULT_HIDDEN,
        "activation": "tanh",
        "members": 5,
        "ece_bins": 15,
    }
    config_path = getattr(args, "config", None)
    if config_path:
        settings.update(parse_config(config_path))
    for key in ("seed", "temperature", "members"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _train_config(settings: dict) -> TrainConfig:
    return TrainConfig(
        epochs=settings["epochs"],
        batch_size=settings["batch_size"],
        learning_rate=settings["learning_rate"],
        lr_drop_epoch=settings["lr_drop_epoch"],
        lr_drop_factor=settings["lr_drop_factor"],
        temperature=settings["temperature"],
        optimizer=settings["optimizer"],
        seed=settings["seed"],
    )


def _require_file(path: str) -> str:
    if not Path(path).exists():
        raise InputValidationError(f"no such file: {path}")
    return path


def cmd_gen_data(args) -> int:
    params = {}
    for key in ("classes", "separation", "sigma", "n", "noise", "distance", "spread"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    dataset = gen_synthetic(args.kind, params, seed=args.seed or 0)
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} samples to {args.out}")
    return 0


def _member_dirs(root: Path) -> list[Path]:
    return sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith("member_"))


def _load_teacher(path: str):
    p = Path(path)
    if p.is_dir():
        dirs = _member_dirs(p)
        if not dirs:
            raise InputValidationError(f"{path}: no member_* subdirectories")
        return [load_model(d) for d in dirs]
    _require_file(path)
    return read_archive(path)


def cmd_train_ensemble(args) -> int:
    settings = _merge_train_settings(args)
    dataset = load_dataset(_require_file(args.data))
    labeled = dataset.y >= 0
    if not labeled.all():
        raise InputValidationError("training data must be fully labeled")
    class_count = int(dataset.y.max()) + 1
    spec = MlpSpec(
        input_dim=dataset.x.shape[1],
        hidden_dims=settings["hidden_dims"],
        output_dim=class_count,
        activation=settings["activation"],
        seed=settings["weight_seed"],
    )
    cfg = _train_config(settings)
    members = train_snn_ensemble(dataset, spec, cfg, settings["members"])
    out = Path(args.out)
    for i, model in enumerate(members):
        save_model(model, out / f"member_{i:02d}")
    print(f"trained {len(members)} members on {len(dataset)} samples into {out}")
    if args.archive_out:
        logits = np.stack([m.logits(dataset.x) for m in members])
        manifest = ArchiveManifest(
            class_count=class_count,
            member_count=len(members),
            sample_count=len(dataset),
            split=args.split,
            creator=_CREATOR,
        )
        write_archive(LogitArchive(manifest=manifest, logits=logits, labels=dataset.y), args.archive_out)
        print(f"wrote teacher logits to {args.archive_out}")
    return 0


def cmd_distill(args) -> int:
    settings = _merge_train_settings(args)
    dataset = load_dataset(_require_file(args.data))
    teacher = _load_teacher(args.teacher)
    class_count = teacher.class_count if isinstance(teacher, LogitArchive) else teacher[0].class_count
    from .train import head_width

    spec = MlpSpec(
        input_dim=dataset.x.shape[1],
        hidden_dims=settings["hidden_dims"],
        output_dim=head_width(args.method, class_count),
        activation=settings["activation"],
        seed=settings["weight_seed"],
    )
    cfg = _train_config(settings)
    student = distill(teacher, args.method, spec, cfg, dataset)
    save_model(student, args.out)
    print(
        f"distilled {args.method} student (T = {cfg.temperature}) from "
        f"{student.teacher_ref}; final loss {student.loss_history[-1]:.6f}; saved to {args.out}"
    )
    return 0


def cmd_wrap(args) -> int:
    archive = read_archive(_require_file(args.archive))
    probs = softmax(archive.logits, axis=-1)
    count = archive.class_count
    header = (
        ["sample", "label"]
        + [f"lower_{k}" for k in range(count)]
        + [f"upper_{k}" for k in range(count)]
        + [f"p_star_{k}" for k in range(count)]
        + ["beta", "tu", "au", "eu", "exact"]
    )
    lines = [",".join(header)]
    for b in range(archive.sample_count):
        system = IntervalSystem(probs[:, b, :].min(axis=0), probs[:, b, :].max(axis=0))
        p_star, beta = intersection_probability(system)
        triple = decompose_uncertainty(system)
        cells = [str(b), str(int(archive.labels[b]))]
        cells += [format_float(v) for v in system.lower]
        cells += [format_float(v) for v in system.upper]
        cells += [format_float(v) for v in p_star]
        cells += [
            format_float(beta),
            format_float(triple.total),
            format_float(triple.aleatoric),
            format_float(triple.epistemic),
            "1" if triple.exact else "0",
        ]
        lines.append(",".join(cells))
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote per-sample credal uncertainty for {archive.sample_count} samples to {args.out}")
    return 0


def _write_metrics_csv(path, model_name: str, report, manifest_ref: str) -> None:
    lines = ["model,method,uncertainty_kind,metric,value"]
    for metric, value in report.metric_rows():
        lines.append(
            f"{model_name},{report.method},{report.uncertainty_kind},{metric},{format_float(value)}"
        )
    lines.append(f"{model_name},{report.method},{report.uncertainty_kind},manifest,{manifest_ref}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _print_summary(model_name: str, report) -> None:
    print(f"model: {model_name}")
    print(f"method: {report.method}  uncertainty: {report.uncertainty_kind} ({report.measure.value})")
    print(f"auroc: {report.auroc:.6f}")
    print(f"auprc: {report.auprc:.6f}")
    print(f"id_accuracy: {report.id_accuracy:.6f}")
    print(f"ece[{report.ece_bins} bins]: {report.ece:.6f}")
    print(f"auarc: {report.auarc:.6f}")
    if not report.exact:
        print("note: aleatoric bound used the greedy heuristic for some samples")


def cmd_eval(args) -> int:
    if args.id_archive or args.ood_archive:
        if not (args.id_archive and args.ood_archive):
            raise InputValidationError("archive evaluation needs both --id-archive and --ood-archive")
        report = evaluate_archives(
            read_archive(_require_file(args.id_archive)),
            read_archive(_require_file(args.ood_archive)),
            args.uncertainty,
            wrapped=args.de_mode == "wrapped",
            ece_bins=args.ece_bins,
            binary_measure=args.binary_interval,
        )
        model_name = args.id_archive
        manifest_ref = args.id_archive
    else:
        if not args.model:
            raise InputValidationError("need --model or --id-archive/--ood-archive")
        model_path = Path(args.model)
        if model_path.is_dir() and _member_dirs(model_path):
            predictor = EnsemblePredictor(
                members=tuple(load_model(d) for d in _member_dirs(model_path)),
                wrapped=args.de_mode == "wrapped",
            )
            manifest_ref = str(model_path / "member_00" / "manifest.txt")
        else:
            predictor = load_model(model_path)
            manifest_ref = str(model_path / "manifest.txt")
        id_data = load_dataset(_require_file(args.id_data))
        ood_data = load_dataset(_require_file(args.ood_data))
        report = evaluate_model(
            predictor,
            id_data,
            ood_data,
            args.uncertainty,
            ece_bins=args.ece_bins,
            binary_measure=args.binary_interval,
        )
        model_name = args.model
    if args.out:
        _write_metrics_csv(args.out, model_name, report, manifest_ref)
    if args.uncertainty_out:
        lines = ["split,index,uncertainty"]
        for i, u in enumerate(report.id_uncertainties):
            lines.append(f"id,{i},{format_float(u)}")
        for i, u in enumerate(report.ood_uncertainties):
            lines.append(f"ood,{i},{format_float(u)}")
        with open(args.uncertainty_out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    if args.ar_out:
        lines = ["rejection_rate,accuracy"]
        for rate, acc in report.ar_curve:
            lines.append(f"{format_float(rate)},{format_float(acc)}")
        with open(args.ar_out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    _print_summary(model_name, report)
    return 0


def cmd_oracle_check(args) -> int:
    if args.cases < 1:
        raise InputValidationError(f"need at least 1 case, got {args.cases}")
    rng = np.random.default_rng(args.seed or 0)
    worst_max = 0.0
    worst_min = 0.0
    rows = []
    for case in range(args.cases):
        system = random_interval_system(rng, args.classes)
        solver_hi = upper_entropy(system)
        solver_lo = lower_entropy(system)
        grid_lo, grid_hi = grid_oracle_entropy_bounds(system, args.step)
        worst_max = max(worst_max, abs(solver_hi - grid_hi))
        worst_min = max(worst_min, abs(solver_lo - grid_lo))
        rows.append((case, solver_lo, grid_lo, solver_hi, grid_hi))
    print(
        f"oracle-check: {args.cases} cases, C = {args.classes}, step = {args.step}: "
        f"max |upper - grid| = {worst_max:.3e}, max |lower - grid| = {worst_min:.3e}"
    )
    if args.out:
        lines = ["case,solver_min,grid_min,solver_max,grid_max"]
        for case, s_lo, g_lo, s_hi, g_hi in rows:
            lines.append(
                f"{case},{format_float(s_lo)},{format_float(g_lo)},"
                f"{format_float(s_hi)},{format_float(g_hi)}"
            )
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="credalkit",
        description="Credal ensemble distillation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    p.add_argument("--kind", required=True, choices=("gaussians", "two_moons", "ood_cluster"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--distance", type=float)
    p.add_argument("--spread", type=float)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-ensemble", help="train M seeded teacher members")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--members", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--archive-out", help="also dump member logits as a .lga archive")
    p.add_argument("--split", default="train", help="split tag for --archive-out")
    p.set_defaults(func=cmd_train_ensemble)

    p = sub.add_parser("distill", help="distill a student from an ensemble teacher")
    p.add_argument("--method", required=True, choices=("ed", "edd", "ced"))
    p.add_argument("--teacher", required=True, help="ensemble directory or .lga archive")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--temperature", type=float)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("wrap", help="per-sample credal uncertainty from an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wrap)

    p = sub.add_parser("eval", help="OOD detection and calibration metrics")
    p.add_argument("--model", help="model directory or ensemble directory")
    p.add_argument("--id-data")
    p.add_argument("--ood-data")
    p.add_argument("--id-archive")
    p.add_argument("--ood-archive")
    p.add_argument("--uncertainty", required=True, choices=("eu", "tu", "au"))
    p.add_argument("--de-mode", choices=("mi", "wrapped"), default="mi")
    p.add_argument("--ece-bins", type=int, default=15)
    p.add_argument("--binary-interval", action="store_true")
    p.add_argument("--out")
    p.add_argument("--uncertainty-out")
    p.add_argument("--ar-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle-check", help="entropy solvers vs the grid oracle")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ArchiveError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except InputValidationError as exc:
        print(f"error: invalid_input: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

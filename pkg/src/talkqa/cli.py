"""Command-line entry point wiring all modules into reproducible commands.

Structured JSON logs go to stderr; human-readable tables go to stdout. Any
flag can be overridden by a TALKQA_<FLAG> environment variable, and values
from ``--config file`` override both.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from talkqa import __version__
from talkqa.errors import TalkqaError
from talkqa.folds import load_folds, make_folds, save_folds
from talkqa.manifest import dump_manifest, load_manifest, validate_manifest
from talkqa.metrics import KERNEL_BACKEND, evaluate_folds
from talkqa.model.backends import extract_features, make_backend_set
from talkqa.model.cache import read_feature_cache, write_feature_cache
from talkqa.model.training import TrainConfig, load_models, predict_cv, save_models, train_cv
from talkqa.ratings_io import (
    read_mos_csv,
    read_pred_csv,
    read_ratings_csv,
    write_pred_csv,
    write_ratings_csv,
    write_report_json,
    write_table_csv,
)
from talkqa.service.config import StudyConfig, load_config
from talkqa.service.planning import load_plan, plan_sessions, save_plan
from talkqa.service.state import StudyService, export_records_from_log
from talkqa.service.store import EventLog
from talkqa.subjective import process_ratings
from talkqa.synth import synth_manifest, synth_mos, synth_table

logger = logging.getLogger("talkqa")

ENV_PREFIX = "TALKQA_"


class JsonLogFormatter(logging.Formatter):
    def format(self, record):
        payload = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        if record.__dict__.get("extra_fields"):
            payload.update(record.__dict__["extra_fields"])
        return json.dumps(payload, sort_keys=True)


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLogFormatter())
    pkg_logger = logging.getLogger("talkqa")
    pkg_logger.handlers = [handler]
    pkg_logger.propagate = False
    pkg_logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def _log_run(command: str, args: argparse.Namespace) -> None:
    fields = {k: v for k, v in vars(args).items() if k not in ("func", "config", "verbose")}
    logger.info(
        "run", extra={"extra_fields": {"command": command, "config": fields, "kernel": KERNEL_BACKEND, "version": __version__}}
    )


def _coerce(value: str, reference):
    if isinstance(reference, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(reference, int):
        return int(value)
    if isinstance(reference, float):
        return float(value)
    return value


def _apply_overrides(args: argparse.Namespace) -> argparse.Namespace:
    """Environment variables override flags; --config file overrides both."""
    import os

    for name, current in vars(args).items():
        if name in ("func", "config"):
            continue
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            setattr(args, name, _coerce(env, current))
    if getattr(args, "config", None):
        path = Path(args.config)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            overrides = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            overrides = json.loads(path.read_text(encoding="utf-8"))
        for name, value in overrides.items():
            if hasattr(args, name):
                setattr(args, name, value)
    return args


def _print_metric_table(averaged, per_fold) -> None:
    print(f"{'fold':>6} {'srcc':>8} {'plcc':>8} {'krcc':>8} {'rmse':>8} {'n':>6}")
    for fe in per_fold:
        r = fe.report
        print(f"{fe.fold:>6} {r.srcc:8.4f} {r.plcc:8.4f} {r.krcc:8.4f} {r.rmse:8.4f} {r.n:>6}")
    print(f"{'mean':>6} {averaged.srcc:8.4f} {averaged.plcc:8.4f} {averaged.krcc:8.4f} {averaged.rmse:8.4f} {averaged.n:>6}")


def _write_metrics_json(path, averaged, per_fold, extra: dict) -> None:
    payload = {
        "averaged": averaged.to_dict(),
        "per_fold": [fe.to_dict() for fe in per_fold],
        **extra,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    sset = load_manifest(args.manifest)
    report = validate_manifest(sset, media_root=args.media_root, check_media=not args.no_media_check)
    print(f"stimuli: {report.total_stimuli}")
    for label in sorted(report.label_counts):
        print(f"  {label}: {report.label_counts[label]}")
    for m in report.count_mismatches:
        print(f"count mismatch: {m['label']} declared {m['declared']}, found {m['found']}")
    if report.missing_media:
        print(f"missing media files: {len(report.missing_media)}")
    for v in report.violations:
        print(f"violation: {v}")
    print("valid" if report.ok else "invalid")
    return 0 if report.ok else 1


def cmd_folds(args) -> int:
    sset = load_manifest(args.manifest)
    plan = make_folds(sset, k=args.k, seed=args.seed)
    save_folds(plan, args.out)
    sizes = [len(s) for s in plan.fold_sources()]
    print(f"wrote {args.out}: {plan.k} folds over {sum(sizes)} sources, sizes {sizes}")
    return 0


def cmd_process(args) -> int:
    records = read_ratings_csv(args.ratings)
    lo, hi = (float(v) for v in args.raw_scale.split(","))
    result = process_ratings(records, raw_scale=(lo, hi), screening=not args.no_screening)
    write_table_csv(result.table, args.out)
    if args.report:
        write_report_json(result.report, args.report)
    print(
        f"processed {result.report.n_ratings_in} ratings -> {len(result.table.rows)} stimuli; "
        f"rejected {len(result.report.rejected)} subject(s), "
        f"degenerate {len(result.report.degenerate)}"
    )
    return 0


def cmd_extract(args) -> int:
    sset = load_manifest(args.manifest)
    mos_map = read_mos_csv(args.mos) if args.mos else None
    backend = make_backend_set(args.backend_set, mos_map=mos_map, seed=args.seed)
    bundles = extract_features(sset, backend)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_path = out_dir / "features.jsonl"
    write_feature_cache(bundles, backend.info(), cache_path)
    print(f"extracted {len(bundles)} bundles with backend {backend.info().version} -> {cache_path}")
    return 0


def cmd_train(args) -> int:
    sset = load_manifest(args.manifest)
    bundles, _ = read_feature_cache(Path(args.features) / "features.jsonl")
    mos = read_mos_csv(args.mos)
    plan = load_folds(args.folds)
    cfg = TrainConfig(hidden=args.hidden, learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    features = {sid: b.fused for sid, b in bundles.items()}
    models, predictions = train_cv(features, mos, plan, sset.source_of(), cfg)
    save_models(models, args.out, meta={"seed": cfg.seed, "epochs": cfg.epochs, "hidden": cfg.hidden, "lr": cfg.learning_rate})
    if args.pred_out:
        write_pred_csv(predictions, args.pred_out)
    final_losses = [round(m.losses[-1], 6) for m in models]
    print(f"trained {len(models)} fold models; final losses {final_losses}")
    return 0


def cmd_infer(args) -> int:
    sset = load_manifest(args.manifest)
    bundles, _ = read_feature_cache(Path(args.features) / "features.jsonl")
    plan = load_folds(args.folds)
    models = load_models(args.model)
    features = {sid: b.fused for sid, b in bundles.items()}
    predictions = predict_cv(models, features, plan, sset.source_of())
    write_pred_csv(predictions, args.out)
    print(f"wrote {len(predictions)} predictions -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    predictions = read_pred_csv(args.pred)
    mos = read_mos_csv(args.mos)
    plan = load_folds(args.folds)
    sset = load_manifest(args.manifest)
    averaged, per_fold = evaluate_folds(predictions, mos, plan, sset.source_of(), fit=not args.no_fit)
    _print_metric_table(averaged, per_fold)
    if args.out:
        _write_metrics_json(args.out, averaged, per_fold, {"fit": not args.no_fit})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from talkqa.service.app import create_app

    sset = load_manifest(args.manifest)
    config = load_config(args.study_config) if args.study_config else StudyConfig()
    if args.log:
        config = StudyConfig(**{**config.to_dict(), "log_path": args.log, "raw_scale": tuple(config.raw_scale), "distortion_labels": tuple(config.distortion_labels)})
    plan = load_plan(args.plan) if args.plan else plan_sessions(sset, max_per_session=args.max_per_session, seed=args.seed)
    if args.plan_out:
        save_plan(plan, args.plan_out)
    service = StudyService.from_manifest(sset, plan, config=config, log=EventLog(config.log_path))
    app = create_app(service)
    print(f"serving {len(sset)} stimuli in {len(plan.sessions)} sessions on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export(args) -> int:
    records = export_records_from_log(args.log)
    write_ratings_csv(records, args.out)
    print(f"exported {len(records)} ratings -> {args.out}")
    return 0


def cmd_e2e(args) -> int:
    """Synthetic chain: manifest -> folds -> extract -> train -> infer -> evaluate."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sset = synth_manifest(n_sources=args.sources, seed=args.seed)
    dump_manifest(sset, out / "manifest.jsonl")
    mos_map = synth_mos(sset, seed=args.seed)
    write_table_csv(synth_table(mos_map), out / "mos.csv")

    plan = make_folds(sset, k=args.k, seed=args.seed)
    save_folds(plan, out / "folds.json")

    backend = make_backend_set(args.backend_set, mos_map=mos_map, seed=args.seed)
    bundles = extract_features(sset, backend)
    write_feature_cache(bundles, backend.info(), out / "features" / "features.jsonl")

    cfg = TrainConfig(hidden=args.hidden, learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    features = {sid: b.fused for sid, b in bundles.items()}
    models, predictions = train_cv(features, mos_map, plan, sset.source_of(), cfg)
    save_models(models, out / "model", meta={"seed": cfg.seed, "backend": backend.info().version})
    write_pred_csv(predictions, out / "pred.csv")

    averaged, per_fold = evaluate_folds(predictions, mos_map, plan, sset.source_of(), fit=not args.no_fit)
    _print_metric_table(averaged, per_fold)
    _write_metrics_json(
        out / "metrics.json",
        averaged,
        per_fold,
        {
            "fit": not args.no_fit,
            "seed": args.seed,
            "backend": backend.info().version,
            "epochs": cfg.epochs,
        },
    )
    print(f"e2e artifacts in {out}")
    return 0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talkqa", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        p.add_argument("--config", default=None, help="JSON/TOML file whose values override flags")
        p.add_argument("--verbose", action="store_true")
        return p

    p = add("validate", cmd_validate, "check a stimulus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-root", default=None)
    p.add_argument("--no-media-check", action="store_true")

    p = add("folds", cmd_folds, "build content-disjoint cross-validation folds")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("process", cmd_process, "ratings CSV -> MOS table")
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--raw-scale", default="0,5")
    p.add_argument("--no-screening", action="store_true")

    p = add("extract", cmd_extract, "run feature extraction backends")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend-set", default="stub", choices=["stub", "oracle", "real"])
    p.add_argument("--out", required=True)
    p.add_argument("--mos", default=None, help="score table, required by the oracle backend")
    p.add_argument("--seed", type=int, default=0)

    p = add("train", cmd_train, "train per-fold regression heads")
    p.add_argument("--features", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--folds", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pred-out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)

    p = add("infer", cmd_infer, "predict with trained fold models")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--folds", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, "fold-wise metrics for predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--folds", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--no-fit", action="store_true")
    p.add_argument("--out", default="metrics.json")

    p = add("serve", cmd_serve, "run the study HTTP service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--study-config", default=None)
    p.add_argument("--plan", default=None)
    p.add_argument("--plan-out", default=None)
    p.add_argument("--log", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-per-session", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = add("export", cmd_export, "export ratings CSV from an event log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)

    p = add("e2e", cmd_e2e, "synthetic end-to-end run for CI")
    p.add_argument("--out", default="e2e-out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sources", type=int, default=100)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--backend-set", default="oracle", choices=["stub", "oracle"])
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--no-fit", action="store_true")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_overrides(args)
    _setup_logging(getattr(args, "verbose", False))
    _log_run(args.command, args)
    try:
        return args.func(args)
    except TalkqaError as exc:
        logger.error(
            "command failed",
            extra={"extra_fields": {"command": args.command, "error": type(exc).__name__, "detail": str(exc)}},
        )
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

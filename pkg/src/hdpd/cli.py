"""Command-line pipeline driver.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from .cohort import CohortError, load_cohort, load_schema
from .dataset import TEST, TRAIN
from .diagrams import ActiveLearningConfig, diagram_from_json, diagram_to_json
from .evaluate import categorize_predictions, evaluate_disease, format_report, tune_k
from .gbdt import TrainConfig
from .model_io import ModelFormatError, load_model, save_model
from .pipeline import (
    PipelineConfig,
    build_dataset,
    build_engine,
    fit_model,
    parse_record_id,
    restrict_dataset,
)
from .rules import label_disease, load_rules, standard_rules
from .synthetic import SyntheticConfig, generate_synthetic
from .workspace import Workspace, WorkspaceError

_MODE_FLAG = {"pmice": "p-mICE", "2d-ice": "2d-ICE"}


def _workspace_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--workspace", required=True, help="workspace directory")


def _load_workspace(args) -> Workspace:
    return Workspace.load(args.workspace)


def _rule_for(ws: Workspace, disease: str):
    rules = ws.load_rules()
    if disease not in rules:
        known = ", ".join(sorted(rules)) or "none"
        raise WorkspaceError(f"no rule for disease {disease!r} (known: {known})")
    return rules[disease]


def _config_for_model(ws: Workspace, disease: str) -> PipelineConfig:
    entry = ws.artifact(ws.model_name(disease))
    return PipelineConfig.from_json(entry.get("config", {}))


def _load_context(ws: Workspace, disease: str):
    """(cohort, dataset, engine, config) rebuilt from stored artifacts."""
    cohort = ws.load_cohort()
    config = _config_for_model(ws, disease)
    model = load_model(ws.artifact_path(ws.model_name(disease)))
    dataset = build_dataset(cohort, _rule_for(ws, disease), config)
    dataset = restrict_dataset(dataset, list(model.features))
    fit = _Fit(model, dataset)
    return cohort, dataset, build_engine(fit, config, disease), config


class _Fit:
    def __init__(self, model, dataset):
        self.model = model
        self.dataset = dataset


# ---- subcommands -----------------------------------------------------------


def cmd_gen_synthetic(args) -> int:
    config = SyntheticConfig(
        n_participants=args.participants,
        n_years=args.years,
        seed=args.seed,
        n_features=args.features,
        missing_rate=args.missing_rate,
    )
    cohort = generate_synthetic(config)
    ws = Workspace(args.workspace)
    ws.store_cohort(cohort, seed=config.seed, config=dataclasses.asdict(config))
    ws.store_rules([config.rule()])
    print(
        f"workspace {ws.root}: {len(cohort)} records, "
        f"{len(cohort.participants())} participants, disease {config.disease!r}"
    )
    return 0


def cmd_ingest(args) -> int:
    schema = load_schema(args.schema)
    cohort = load_cohort(args.cohort, schema)
    ws = Workspace(args.workspace)
    ws.store_cohort(cohort)
    rules = load_rules(args.rules) if args.rules else standard_rules()
    ws.store_rules(rules)
    print(
        f"workspace {ws.root}: {len(cohort)} records, "
        f"{len(rules)} disease rules ({', '.join(sorted(rules))})"
    )
    return 0


def cmd_label(args) -> int:
    ws = _load_workspace(args)
    cohort = ws.load_cohort()
    rules = ws.load_rules()
    diseases = [args.disease] if args.disease else sorted(rules)
    print(f"{'disease':<24}{'labeled':>9}{'positive':>10}{'unlabeled':>11}")
    for disease in diseases:
        if disease not in rules:
            raise WorkspaceError(f"no rule for disease {disease!r}")
        labels = label_disease(cohort, rules[disease])
        values = list(labels.values())
        n_pos = sum(1 for v in values if v == 1)
        n_unl = sum(1 for v in values if v is None)
        print(f"{disease:<24}{len(values) - n_unl:>9}{n_pos:>10}{n_unl:>11}")
    return 0


def cmd_train(args) -> int:
    ws = _load_workspace(args)
    cohort = ws.load_cohort()
    rule = _rule_for(ws, args.disease)
    config = PipelineConfig(
        horizon_years=args.horizon,
        train_fraction=args.train_fraction,
        split_seed=args.seed,
        rfe_target=args.rfe,
        train=TrainConfig(
            rounds=args.rounds,
            max_depth=args.depth,
            learning_rate=args.learning_rate,
            seed=args.seed,
        ),
    )
    dataset = build_dataset(cohort, rule, config)
    fit = fit_model(dataset, config)
    relpath = f"models/{args.disease}.json"
    path = ws.root / relpath
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(fit.model, path)
    ws.add_artifact(
        ws.model_name(args.disease),
        relpath,
        "model",
        seed=args.seed,
        config=config.to_json(),
    )
    n_tr = fit.dataset.rows_in(TRAIN).size
    n_te = fit.dataset.rows_in(TEST).size
    auc_txt = "n/a" if fit.test_auc is None else f"{fit.test_auc:.4f}"
    print(
        f"{args.disease}: {n_tr} train / {n_te} test rows, "
        f"{len(fit.model.features)} columns, test AUC {auc_txt}, "
        f"threshold {fit.model.threshold:.4f}"
    )
    if fit.rfe_trace:
        kept, score = fit.rfe_trace[-1]
        print(f"feature elimination: {fit.rfe_trace[0][0]} -> {kept} columns "
              f"(val AUC {score:.4f})")
    return 0


def cmd_tune_k(args) -> int:
    ws = _load_workspace(args)
    cohort, dataset, engine, config = _load_context(ws, args.disease)
    rows = dataset.rows_in(TRAIN)
    probs = engine.model.predict_proba(dataset.X[rows])
    records = categorize_predictions(dataset, probs, rows, engine.model.threshold)
    if args.max_records is not None:
        records = records[: args.max_records]
    best, scores = tune_k(engine, cohort, dataset, records, config.horizon_years)
    print(f"{'k':>4}  score")
    for k in sorted(scores):
        mark = " *" if k == best else ""
        print(f"{k:>4}  {scores[k]:.4f}{mark}")
    new_config = dataclasses.replace(
        config, projection=dataclasses.replace(config.projection, k=best)
    )
    entry = ws.artifact(ws.model_name(args.disease))
    ws.add_artifact(
        ws.model_name(args.disease),
        entry["path"],
        "model",
        seed=entry.get("seed"),
        config=new_config.to_json(),
    )
    print(f"stored k={best} in model config for {args.disease!r}")
    return 0


def _compute_diagram(args, engine, dataset, cohort):
    pid, year = parse_record_id(args.record)
    x0, miss0 = dataset.space.encode_row(cohort.record(pid, year).values)
    mode = _MODE_FLAG[args.mode]
    if getattr(args, "active", False):
        al = ActiveLearningConfig(budget=args.budget)
        return engine.diagram_active(x0, miss0, args.record, args.x, args.y, al, mode)
    return engine.diagram_full(x0, miss0, args.record, args.x, args.y, mode)


def cmd_diagram(args) -> int:
    ws = _load_workspace(args)
    cohort, dataset, engine, config = _load_context(ws, args.disease)
    diagram = _compute_diagram(args, engine, dataset, cohort)
    slug = f"{args.record}_{args.disease}_{args.x}_{args.y}_{args.mode}".replace("@", "_")
    relpath = args.out or f"diagrams/{slug}.json"
    ws.write_json(relpath, diagram_to_json(diagram))
    ws.add_artifact(
        f"diagram:{args.record}:{args.disease}:{args.x}:{args.y}:{args.mode}",
        relpath,
        "diagram",
        config=config.to_json(),
    )
    print(f"{relpath}: pattern {diagram.pattern}, "
          f"{int(diagram.label.sum())}/{diagram.label.size} onset cells")
    return 0


def cmd_batch(args) -> int:
    ws = _load_workspace(args)
    cohort, dataset, engine, config = _load_context(ws, args.disease)
    rows = dataset.rows_in(args.split)
    probs = engine.model.predict_proba(dataset.X[rows])
    records = categorize_predictions(dataset, probs, rows, engine.model.threshold)
    if args.max_records is not None:
        records = records[: args.max_records]
    if not records:
        raise ValueError(f"no predicted-onset records in split {args.split!r}")
    mode = _MODE_FLAG[args.mode]
    payload = []
    for rec in records:
        pid, year = rec.key
        rid = f"{pid}@{year}"
        diagrams = engine.batch_diagrams(
            dataset.X[rec.row], dataset.miss[rec.row], rid, mode
        )
        payload.append(
            {"record_id": rid, "outcome": rec.outcome,
             "diagrams": [diagram_to_json(d) for d in diagrams]}
        )
    relpath = f"diagrams/batch_{args.disease}_{args.split}_{args.mode}.json"
    ws.write_json(relpath, payload)
    ws.add_artifact(
        f"batch:{args.disease}:{args.split}:{args.mode}",
        relpath,
        "batch",
        config=config.to_json(),
    )
    n = sum(len(p["diagrams"]) for p in payload)
    print(f"{relpath}: {n} diagrams over {len(payload)} records")
    return 0


def cmd_evaluate(args) -> int:
    ws = _load_workspace(args)
    cohort, dataset, engine, config = _load_context(ws, args.disease)
    report = evaluate_disease(
        engine,
        cohort,
        dataset,
        horizon_years=config.horizon_years,
        max_records=args.max_records,
    )
    relpath = f"reports/{args.disease}.json"
    ws.write_json(relpath, report.to_json())
    ws.add_artifact(
        f"report:{args.disease}", relpath, "report", config=config.to_json()
    )
    print(format_report(report))
    return 0


def cmd_serve(args) -> int:
    from .service import run_service

    port = args.port if args.port is not None else int(os.environ.get("HDPD_PORT", "8000"))
    run_service(args.workspace, host=args.host, port=port)
    return 0


def cmd_plot(args) -> int:
    from .plotting import render_diagram

    ws = _load_workspace(args)
    if args.diagram:
        diagram = diagram_from_json(ws.read_json(ws.artifact(args.diagram)["path"]))
    else:
        for flag in ("record", "disease", "x", "y"):
            if getattr(args, flag) is None:
                raise ValueError("plot needs --diagram or all of --record/--disease/--x/--y")
        cohort, dataset, engine, _ = _load_context(ws, args.disease)
        diagram = _compute_diagram(args, engine, dataset, cohort)
    render_diagram(diagram, args.out)
    print(f"wrote {args.out}")
    return 0


# ---- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdpd", description="health-disease phase diagram pipeline"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-synthetic", help="generate a synthetic cohort workspace")
    _workspace_arg(p)
    p.add_argument("--participants", type=int, default=2000)
    p.add_argument("--years", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--missing-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_gen_synthetic)

    p = subs.add_parser("ingest", help="load a cohort CSV + schema into a workspace")
    _workspace_arg(p)
    p.add_argument("--cohort", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--rules", help="rule JSON; defaults to the built-in rule set")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("label", help="apply disease rules and report label counts")
    _workspace_arg(p)
    p.add_argument("--disease")
    p.set_defaults(func=cmd_label)

    p = subs.add_parser("train", help="fit a predictor for one disease")
    _workspace_arg(p)
    p.add_argument("--disease", required=True)
    p.add_argument("--horizon", type=int, default=3)
    p.add_argument("--rfe", type=int, default=None,
                   help="eliminate features down to this many encoded columns")
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("tune-k", help="tune the projection neighbor count")
    _workspace_arg(p)
    p.add_argument("--disease", required=True)
    p.add_argument("--max-records", type=int, default=None)
    p.set_defaults(func=cmd_tune_k)

    p = subs.add_parser("diagram", help="compute one phase diagram")
    _workspace_arg(p)
    p.add_argument("--record", required=True, help="participant@year")
    p.add_argument("--disease", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_FLAG), default="pmice")
    p.add_argument("--active", action="store_true", help="boundary search instead of full grid")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--out", help="output path relative to the workspace")
    p.set_defaults(func=cmd_diagram)

    p = subs.add_parser("batch", help="diagrams for every predicted-onset record")
    _workspace_arg(p)
    p.add_argument("--disease", required=True)
    p.add_argument("--split", choices=[TRAIN, TEST], default=TEST)
    p.add_argument("--max-records", type=int, default=None)
    p.add_argument("--mode", choices=sorted(_MODE_FLAG), default="pmice")
    p.set_defaults(func=cmd_batch)

    p = subs.add_parser("evaluate", help="retrospective evaluation for one disease")
    _workspace_arg(p)
    p.add_argument("--disease", required=True)
    p.add_argument("--max-records", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("serve", help="run the HTTP service")
    _workspace_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help="default: HDPD_PORT environment variable or 8000")
    p.set_defaults(func=cmd_serve)

    p = subs.add_parser("plot", help="render a diagram to a PNG")
    _workspace_arg(p)
    p.add_argument("--diagram", help="name of a stored diagram artifact")
    p.add_argument("--record")
    p.add_argument("--disease")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--mode", choices=sorted(_MODE_FLAG), default="pmice")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        WorkspaceError,
        CohortError,
        ModelFormatError,
        ValueError,
        KeyError,
        np.linalg.LinAlgError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

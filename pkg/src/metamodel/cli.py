"""Command-line front end: train, predict, evaluate, compare, importance,
and effective-n subcommands.

Outputs are deterministic for fixed inputs and seeds (timestamps only appear
in logs). Exit codes: 0 success, 1 usage/config error, 2 data error,
3 numeric failure. The METAMODEL_WORKERS environment variable sets the
training worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import (
    MetaModel,
    MetaModelConfig,
    fit_metamodel,
    metamodel_importance,
    metamodel_predict,
)
from .exceptions import ConfigError, DataError, NumericError
from .learners import (
    CLASSIFICATION_CATALOGUE,
    REGRESSION_CATALOGUE,
    ClassifierSpec,
    RegressorSpec,
)
from .metrics import (
    ALL_METRICS,
    RMSE,
    aggregate_multi_target,
    compute_metric,
    effective_sample_size,
    select_weight_metric,
)
from .persist import load_metamodel, save_metamodel
from .significance import bootstrap_compare
from .tabular import (
    REGRESSION,
    TASKS,
    load_dataset,
    load_split_file,
    make_random_split,
)

log = logging.getLogger("metamodel")

_CONFIG_KEYS = {
    "data": str,
    "target": str,
    "task": str,
    "split_frac": str,
    "split_file": str,
    "seed": int,
    "out": str,
    "keep_models": int,
    "feature_keep_ratio": float,
    "roster_per_kind": int,
    "kinds": str,
    "minority_threshold": float,
    "perm_repeats": int,
    "n_boot": int,
    "metric": str,
}


@dataclass
class RunConfig:
    data: str | None = None
    targets: list[str] = field(default_factory=list)
    task: str | None = None
    split_frac: tuple[float, float, float] | None = None
    split_file: str | None = None
    seed: int = 0
    out: str | None = None
    keep_models: int = 10
    feature_keep_ratio: float = 0.02
    roster_per_kind: int = 2
    kinds: list[str] | None = None
    minority_threshold: float = 0.10
    perm_repeats: int = 5
    n_boot: int = 10000
    metric: str | None = None
    hp: dict[str, dict[str, object]] = field(default_factory=dict)


def _parse_scalar(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_scalar(part) for part in text.split(","))
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if text.lower() in ("none", "null"):
        return None
    return text


def read_config_file(path: str | Path) -> RunConfig:
    """Flat key=value config; '#' starts a comment; unknown keys rejected.

    Per-kind hyperparameters use dotted keys, e.g.
    ``hp.random-forest.n_trees = 50``.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    config = RunConfig()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("hp."):
            bits = key.split(".")
            if len(bits) != 3 or not bits[1] or not bits[2]:
                raise ConfigError(f"{path}:{lineno}: hp keys look like hp.<kind>.<param>")
            kind, param = bits[1], bits[2]
            if kind not in set(REGRESSION_CATALOGUE) | set(CLASSIFICATION_CATALOGUE):
                raise ConfigError(f"{path}:{lineno}: unknown learner kind {kind!r}")
            config.hp.setdefault(kind, {})[param] = _parse_scalar(value)
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        caster = _CONFIG_KEYS[key]
        try:
            parsed = caster(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
        if key == "target":
            config.targets = [t.strip() for t in parsed.split(",") if t.strip()]
        elif key == "split_frac":
            config.split_frac = _parse_fractions(parsed)
        elif key == "kinds":
            config.kinds = [k.strip() for k in parsed.split(",") if k.strip()]
        else:
            setattr(config, key, parsed)
    return config


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"split fractions need three values, got {text!r}")
    try:
        frac = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"cannot parse split fractions {text!r}") from None
    return frac  # validated later by make_random_split


def _merge_flags(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "data", None):
        config.data = args.data
    if getattr(args, "target", None):
        config.targets = list(args.target)
    if getattr(args, "task", None):
        config.task = args.task
    if getattr(args, "split_frac", None):
        config.split_frac = _parse_fractions(args.split_frac)
    if getattr(args, "split_file", None):
        config.split_file = args.split_file
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "out", None):
        config.out = args.out
    for name in ("keep_models", "feature_keep_ratio", "roster_per_kind",
                 "minority_threshold", "perm_repeats", "n_boot", "metric"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if getattr(args, "kinds", None):
        config.kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    return config


def build_roster(config: RunConfig):
    """Roster of roster_per_kind seed-varied specs per kind, with any
    hp.<kind>.<param> overrides applied."""
    catalogue = (REGRESSION_CATALOGUE if config.task == REGRESSION
                 else CLASSIFICATION_CATALOGUE)
    spec_cls = RegressorSpec if config.task == REGRESSION else ClassifierSpec
    kinds = config.kinds if config.kinds else list(catalogue)
    for kind in kinds:
        if kind not in catalogue:
            raise ConfigError(f"unknown {config.task} learner kind {kind!r}")
    roster = []
    index = 0
    for _ in range(max(1, config.roster_per_kind)):
        for kind in kinds:
            seed = int(np.random.SeedSequence((config.seed, 1, index)).generate_state(1)[0])
            try:
                roster.append(spec_cls(kind=kind,
                                       hyperparameters=dict(config.hp.get(kind, {})),
                                       seed=seed))
            except DataError as exc:
                raise ConfigError(str(exc)) from None
            index += 1
    return tuple(roster)


def _format_float(x: float) -> str:
    return repr(float(x))


def _write_predictions(path: Path, row_ids, y_true, y_pred) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "y_true", "y_pred"])
        for rid, t, p in zip(row_ids, y_true, y_pred):
            truth = "" if (t is None or (isinstance(t, float) and np.isnan(t))) else _format_float(t)
            writer.writerow([rid, truth, _format_float(p)])


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _model_summary(model: MetaModel) -> dict:
    return {
        "target": model.target_name,
        "task": model.task,
        "feature_names": list(model.feature_names),
        "slots": [
            {
                "kind": slot.spec.kind,
                "spec_seed": slot.spec.seed,
                "split_seed": slot.split_seed,
                "validation_metric": slot.score.name,
                "validation_score": slot.score.value,
                "weight": slot.weight,
            }
            for slot in model.slots
        ],
        "dropped_constant": list(model.filter_report.dropped_constant),
        "importance": {
            name: float(value)
            for name, value in zip(model.importance.feature_names,
                                   model.importance.values)
        },
    }


def _roster_table(model: MetaModel) -> str:
    lines = [f"{'kind':<24} {'weight':>10} {'val metric':>12} {'val score':>12}"]
    for slot in model.slots:
        lines.append(
            f"{slot.spec.kind:<24} {slot.weight:>10.4f} "
            f"{slot.score.name:>12} {slot.score.value:>12.6g}"
        )
    return "\n".join(lines)


def cmd_train(args) -> int:
    config = read_config_file(args.config) if args.config else RunConfig()
    config = _merge_flags(config, args)
    if not config.data:
        raise ConfigError("train needs --data (or 'data' in the config file)")
    if not config.targets:
        raise ConfigError("train needs at least one --target")
    if config.task not in TASKS:
        raise ConfigError("train needs --task regression|classification")
    if not config.out:
        raise ConfigError("train needs --out")
    if config.seed < 0:
        raise ConfigError("--seed must be non-negative")
    if config.split_file and config.split_frac:
        raise ConfigError("choose one split source: --split-file or --split-frac")

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table, targets, load_report = load_dataset(config.data, config.targets, config.task)
    if config.split_file:
        split = load_split_file(config.split_file, table.row_ids)
    else:
        split = make_random_split(table.n_rows,
                                  config.split_frac or (0.8, 0.1, 0.1),
                                  config.seed)
    roster = build_roster(config)
    mm_config = MetaModelConfig(
        task=config.task,
        roster=roster,
        keep_models=config.keep_models,
        feature_keep_ratio=config.feature_keep_ratio,
        split_fractions=config.split_frac or (0.8, 0.1, 0.1),
        seed=config.seed,
        minority_threshold=config.minority_threshold,
        permutation_repeats=config.perm_repeats,
    )

    report: dict = {
        "data": str(config.data),
        "task": config.task,
        "seed": config.seed,
        "split": {"train": len(split.train_idx), "val": len(split.val_idx),
                  "test": len(split.test_idx)},
        "dropped_nonfinite": list(load_report.dropped_nonfinite),
        "dropped_constant": list(load_report.dropped_constant),
        "roster_size": len(roster),
        "targets": {},
    }
    for target in targets:
        log.info("training target %s", target.name)
        model = fit_metamodel(mm_config, table, target, test_idx=split.test_idx)
        model_path = out_dir / f"model_{target.name}.mmdl"
        save_metamodel(model, model_path)
        test_rows = [i for i in split.test_idx if target.present_mask[i]]
        if test_rows:
            pred = metamodel_predict(model, table.take_rows(test_rows))
            _write_predictions(
                out_dir / f"predictions_{target.name}.csv",
                [table.row_ids[i] for i in test_rows],
                [target.values[i] for i in test_rows],
                pred,
            )
        report["targets"][target.name] = _model_summary(model)
        report["targets"][target.name]["model_file"] = model_path.name
        log.info("target %s: %d slots retained, %d features kept",
                 target.name, len(model.slots), len(model.feature_names))

    _write_json(out_dir / "training_report.json", report)
    text = []
    for name, summary in report["targets"].items():
        text.append(f"target: {name}")
        text.append(_roster_table(load_metamodel(out_dir / summary["model_file"])))
        text.append("")
    (out_dir / "training_report.txt").write_text("\n".join(text), encoding="utf-8")
    return 0


def cmd_predict(args) -> int:
    model = load_metamodel(args.model)
    targets = [model.target_name]
    table, target_cols, _ = load_dataset(args.data, targets, model.task)
    pred = metamodel_predict(model, table)
    truth = target_cols[0].values
    _write_predictions(Path(args.out), table.row_ids, truth, pred)
    return 0


def _default_eval_metric(model: MetaModel, labels: np.ndarray) -> str:
    if model.task == REGRESSION:
        return RMSE
    return select_weight_metric(labels, model.config.minority_threshold)


def cmd_evaluate(args) -> int:
    models = [load_metamodel(p) for p in args.model]
    tasks = {m.task for m in models}
    if len(tasks) != 1:
        raise ConfigError("all models passed to evaluate must share one task")
    task = tasks.pop()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    target_names = [m.target_name for m in models]
    table, target_cols, _ = load_dataset(args.data, target_names, task)
    by_name = dict(zip(target_names, target_cols))

    per_target: dict[str, dict] = {}
    values = []
    for model in models:
        target = by_name[model.target_name]
        present = np.flatnonzero(target.present_mask)
        if present.size == 0:
            raise DataError(f"target {model.target_name!r} has no present values")
        pred_all = metamodel_predict(model, table)
        metric = args.metric or _default_eval_metric(model, target.values[present])
        result = compute_metric(pred_all[present], target.values[present], metric)
        _write_predictions(
            out_dir / f"predictions_{model.target_name}.csv",
            table.row_ids, target.values, pred_all,
        )
        per_target[model.target_name] = {
            "metric": result.name,
            "value": result.value,
            "n": result.n,
            "roster": _model_summary(model)["slots"],
            "importance": _model_summary(model)["importance"],
        }
        values.append(result.value)

    # a zero error (perfect predictions) has no geometric mean; report null
    try:
        aggregated = aggregate_multi_target(values, task)
    except DataError:
        aggregated = None
    report = {
        "task": task,
        "targets": per_target,
        "aggregated": {
            "method": "geometric_mean" if task == REGRESSION else "arithmetic_mean",
            "value": aggregated,
        },
    }
    _write_json(out_dir / "evaluation_report.json", report)
    lines = [f"{'target':<20} {'metric':>10} {'value':>14} {'n':>8}"]
    for name, entry in per_target.items():
        lines.append(f"{name:<20} {entry['metric']:>10} {entry['value']:>14.6g} "
                     f"{entry['n']:>8}")
    agg_text = "n/a" if aggregated is None else f"{aggregated:.6g}"
    lines.append(f"aggregated ({report['aggregated']['method']}): {agg_text}")
    (out_dir / "evaluation_report.txt").write_text("\n".join(lines) + "\n",
                                                   encoding="utf-8")
    print("\n".join(lines))
    return 0


def _read_predictions(path: str, truth_column: str) -> dict[str, tuple[float | None, float]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    rows: dict[str, tuple[float | None, float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise DataError(f"{path}: predictions file needs an 'id' column")
        for col in (truth_column, "y_pred"):
            if col not in reader.fieldnames:
                raise DataError(f"{path}: missing column {col!r}")
        for rec in reader:
            rid = rec["id"]
            if rid in rows:
                raise DataError(f"{path}: duplicate id {rid!r}")
            truth_text = (rec[truth_column] or "").strip()
            truth = float(truth_text) if truth_text else None
            rows[rid] = (truth, float(rec["y_pred"]))
    return rows


def cmd_compare(args) -> int:
    rows_a = _read_predictions(args.preds_a, args.truth_column)
    rows_b = _read_predictions(args.preds_b, args.truth_column)
    if set(rows_a) != set(rows_b):
        raise DataError("prediction files do not cover the same row ids")
    ids = sorted(rows_a)
    truth = []
    pred_a = []
    pred_b = []
    for rid in ids:
        t_a, p_a = rows_a[rid]
        t_b, p_b = rows_b[rid]
        if (t_a is None) != (t_b is None) or (
            t_a is not None and t_b is not None and t_a != t_b
        ):
            raise DataError(f"truth values disagree for id {rid!r}")
        if t_a is None:
            continue
        truth.append(t_a)
        pred_a.append(p_a)
        pred_b.append(p_b)
    result = bootstrap_compare(pred_a, pred_b, truth, metric=args.metric,
                               n_boot=args.n_boot, seed=args.seed)
    lines = [
        f"metric: {result.metric}",
        f"model A ({args.preds_a}): {result.metric_a:.6g}",
        f"model B ({args.preds_b}): {result.metric_b:.6g}",
        f"p(B beats A) over {result.n_boot} resamples: {result.p_value:.6g}",
    ]
    print("\n".join(lines))
    if args.out:
        _write_json(Path(args.out), {
            "metric": result.metric,
            "metric_a": result.metric_a,
            "metric_b": result.metric_b,
            "p_value": result.p_value,
            "n_boot": result.n_boot,
            "seed": result.seed,
            "n_rows": len(truth),
        })
    return 0


def cmd_importance(args) -> int:
    model = load_metamodel(args.model)
    importance = metamodel_importance(model)
    order = np.argsort(-importance.values, kind="stable")
    lines = [f"{'feature':<32} {'importance':>12}"]
    for j in order:
        lines.append(f"{importance.feature_names[j]:<32} {importance.values[j]:>12.6g}")
    print("\n".join(lines))
    if args.out:
        _write_json(Path(args.out), {
            "target": model.target_name,
            "importance": {importance.feature_names[j]: float(importance.values[j])
                           for j in order},
        })
    return 0


def cmd_effective_n(args) -> int:
    targets = list(args.target or [])
    if not targets:
        with Path(args.data).open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if not header:
            raise DataError(f"{args.data}: empty file")
        targets = [c for c in header[1:] if not c.startswith("f_")]
        if not targets:
            raise DataError(f"{args.data}: no target columns found")
    _, target_cols, _ = load_dataset(args.data, targets, REGRESSION)
    matrix = np.column_stack([t.values for t in target_cols])
    eff = effective_sample_size(matrix)
    lines = [f"{'target':<24} {'present':>10} {'effective_n':>14}"]
    for t, value in zip(target_cols, eff):
        lines.append(f"{t.name:<24} {int(t.present_mask.sum()):>10} {value:>14.2f}")
    print("\n".join(lines))
    if args.out:
        _write_json(Path(args.out), {
            "effective_n": {t.name: float(v) for t, v in zip(target_cols, eff)},
        })
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metamodel",
                     description="Heterogeneous validation-weighted ensemble "
                                 "for tabular property prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit one ensemble per target")
    train.add_argument("--data")
    train.add_argument("--target", action="append")
    train.add_argument("--task", choices=TASKS)
    train.add_argument("--split-frac", dest="split_frac")
    train.add_argument("--split-file", dest="split_file")
    train.add_argument("--seed", type=int)
    train.add_argument("--out")
    train.add_argument("--config")
    train.add_argument("--keep-models", dest="keep_models", type=int)
    train.add_argument("--feature-keep-ratio", dest="feature_keep_ratio", type=float)
    train.add_argument("--roster-per-kind", dest="roster_per_kind", type=int)
    train.add_argument("--kinds")
    train.add_argument("--minority-threshold", dest="minority_threshold", type=float)
    train.add_argument("--perm-repeats", dest="perm_repeats", type=int)
    train.set_defaults(func=cmd_train)

    predict = sub.add_parser("predict", help="write predictions for a dataset")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--out", required=True)
    predict.set_defaults(func=cmd_predict)

    evaluate = sub.add_parser("evaluate", help="score saved models on a dataset")
    evaluate.add_argument("--model", action="append", required=True)
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--out", required=True)
    evaluate.add_argument("--metric", choices=ALL_METRICS)
    evaluate.set_defaults(func=cmd_evaluate)

    compare = sub.add_parser("compare", help="paired bootstrap model comparison")
    compare.add_argument("preds_a")
    compare.add_argument("preds_b")
    compare.add_argument("--truth-column", dest="truth_column", default="y_true")
    compare.add_argument("--metric", choices=ALL_METRICS, required=True)
    compare.add_argument("--n-boot", dest="n_boot", type=int, default=10000)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--out")
    compare.set_defaults(func=cmd_compare)

    importance = sub.add_parser("importance", help="show a model's feature importance")
    importance.add_argument("--model", required=True)
    importance.add_argument("--out")
    importance.set_defaults(func=cmd_importance)

    effective = sub.add_parser("effective-n",
                               help="correlation-weighted effective sample size")
    effective.add_argument("--data", required=True)
    effective.add_argument("--target", action="append")
    effective.add_argument("--out")
    effective.set_defaults(func=cmd_effective_n)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

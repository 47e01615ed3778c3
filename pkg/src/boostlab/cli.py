"""Command-line entry point: train / predict / eval / compare / synth.

Exit codes: 0 success, 1 usage error, 2 data or model error. Output files are
written atomically (temp file + rename), so a failing run never leaves a
half-written file behind. The BOOSTLAB_SEED environment variable overrides
the default seed wherever --seed is not given explicitly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text
from .bench import BenchmarkConfig, SyntheticSpec, paper_preset_config, run_benchmark
from .boost import (
    ALGORITHMS,
    BoostParams,
    default_params,
    fit,
    load_model,
    paper_preset,
    predict_scores,
    save_model,
)
from .dataset import (
    Dataset,
    FeatureSchema,
    dataset_to_csv_text,
    infer_schema,
    load_csv,
    load_features_csv,
    pcos_default_schema,
    synthesize,
)
from .errors import BoostlabError, LengthMismatch, MalformedCsv
from .metrics import (
    MetricScores,
    confusion,
    pr_curve,
    pr_to_csv,
    roc_curve,
    roc_to_csv,
)

DEFAULT_SEED = 42


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(self, message)


def _resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("BOOSTLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise MalformedCsv(f"BOOSTLAB_SEED is not an integer: {env!r}") from None
    return DEFAULT_SEED


def _add_param_flags(p: argparse.ArgumentParser):
    p.add_argument("--rounds", type=int, default=None, help="boosting rounds")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--depth", type=int, default=None, help="tree depth")
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=None, help="L2 leaf penalty")
    p.add_argument("--gamma", type=float, default=None, help="minimum split gain")
    p.add_argument("--min-child-weight", type=float, default=None)
    p.add_argument("--cat-one-hot-max", type=int, default=None)
    p.add_argument("--cat-prior", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="default 42, or BOOSTLAB_SEED")
    p.add_argument("--threshold", type=float, default=None, help="label threshold, default 0.5")
    p.add_argument("--preset", choices=["paper"], default=None)


def _build_params(args, algorithm: str, seed: int) -> BoostParams:
    params = paper_preset(algorithm) if args.preset == "paper" else default_params(algorithm)
    params = replace(params, seed=seed)
    overrides = {
        "n_rounds": args.rounds,
        "learning_rate": args.learning_rate,
        "max_depth": args.depth,
        "reg_lambda": args.reg_lambda,
        "gamma": args.gamma,
        "min_child_weight": args.min_child_weight,
        "cat_one_hot_max": args.cat_one_hot_max,
        "cat_prior": args.cat_prior,
        "threshold": args.threshold,
    }
    set_fields = {k: v for k, v in overrides.items() if v is not None}
    return replace(params, **set_fields)


def _add_data_flags(p: argparse.ArgumentParser):
    p.add_argument("--schema", default=None, help="schema JSON file; inferred when omitted")
    p.add_argument("--label", default="pcos", help="label column name for schema inference")


def _load_schema_arg(args) -> FeatureSchema | None:
    if args.schema is None:
        return None
    with open(args.schema, encoding="utf-8") as fh:
        return FeatureSchema.from_dict(json.load(fh))


def _load_dataset(args, path) -> Dataset:
    schema = _load_schema_arg(args)
    if schema is None:
        schema = infer_schema(path, args.label)
    return load_csv(path, schema)


def _read_scores_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: file is empty") from None
        if [h.strip() for h in header] != ["score"]:
            raise MalformedCsv(f"{path}: expected a single-column header 'score'")
        try:
            values = [float(row[0]) for row in reader if row]
        except (ValueError, IndexError):
            raise MalformedCsv(f"{path}: unparsable score cell") from None
    scores = np.asarray(values, dtype=np.float64)
    if scores.size == 0:
        raise MalformedCsv(f"{path}: no scores")
    if not np.isfinite(scores).all():
        raise MalformedCsv(f"{path}: scores must be finite")
    return scores


def _read_label_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: file is empty") from None
        if [h.strip() for h in header] != ["label"]:
            raise MalformedCsv(f"{path}: expected a single-column header 'label'")
        values = []
        for row in reader:
            if not row:
                continue
            cell = row[0].strip()
            if cell not in ("0", "1"):
                raise MalformedCsv(f"{path}: label {cell!r} is not 0/1")
            values.append(int(cell))
    if not values:
        raise MalformedCsv(f"{path}: no labels")
    return np.asarray(values, dtype=np.int64)


def _cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    data = _load_dataset(args, args.data)
    params = _build_params(args, args.algo, seed)
    model = fit(args.algo, data, params)
    save_model(model, args.model_out)
    print(f"trained {args.algo} on {data.n_rows} rows -> {args.model_out}")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    values = load_features_csv(args.data, model.schema)
    data = Dataset(model.schema, values, np.zeros(values.shape[0], dtype=np.int64))
    scores = predict_scores(model, data)
    lines = ["score"] + [f"{s:.6f}" for s in scores]
    atomic_write_text(args.scores_out, "\n".join(lines) + "\n")
    print(f"wrote {scores.size} scores -> {args.scores_out}")
    return 0


def _cmd_eval(args) -> int:
    scores = _read_scores_csv(args.scores)
    if args.truth is not None:
        truth = _read_label_csv(args.truth)
    else:
        truth = _load_dataset(args, args.data).labels
    if scores.shape != truth.shape:
        raise LengthMismatch(f"length mismatch: {scores.size} scores vs {truth.size} labels")
    pred = (scores >= args.threshold).astype(np.int64)
    cm = confusion(pred, truth)
    roc = roc_curve(scores, truth)
    pr = pr_curve(scores, truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "n": int(truth.size),
        "threshold": args.threshold,
        "confusion": cm.to_dict(),
        "metrics": MetricScores.from_confusion(cm).to_dict(),
        "auc": roc.auc,
    }
    atomic_write_text(out / "metrics.json", json.dumps(payload, indent=2) + "\n")
    atomic_write_text(out / "roc.csv", roc_to_csv(roc))
    atomic_write_text(out / "pr.csv", pr_to_csv(pr))
    print(f"wrote metrics.json, roc.csv, pr.csv -> {out}")
    return 0


def _cmd_compare(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.preset == "paper":
        config = paper_preset_config(seed)
        base_params = dict(config.params)
    else:
        config = None
        base_params = {algo: default_params(algo) for algo in ALGORITHMS}

    overrides = {
        "n_rounds": args.rounds,
        "learning_rate": args.learning_rate,
        "max_depth": args.depth,
        "reg_lambda": args.reg_lambda,
        "gamma": args.gamma,
        "min_child_weight": args.min_child_weight,
        "cat_one_hot_max": args.cat_one_hot_max,
        "cat_prior": args.cat_prior,
        "threshold": args.threshold,
    }
    set_fields = {k: v for k, v in overrides.items() if v is not None}
    params = {
        algo: replace(p, seed=seed, **set_fields) for algo, p in base_params.items()
    }

    if args.synthetic:
        defaults = config.synthetic if config is not None else SyntheticSpec(n=500)
        synthetic = SyntheticSpec(
            n=args.n if args.n is not None else defaults.n,
            signal_strength=(
                args.signal_strength
                if args.signal_strength is not None
                else defaults.signal_strength
            ),
            missing_rate=(
                args.missing_rate if args.missing_rate is not None else defaults.missing_rate
            ),
        )
        csv_path = None
    else:
        synthetic = None
        csv_path = args.data

    test_fraction = args.test_fraction
    if test_fraction is None:
        test_fraction = config.test_fraction if config is not None else 0.2

    bench_config = BenchmarkConfig(
        csv_path=csv_path,
        synthetic=synthetic,
        schema=_load_schema_arg(args),
        label_column=args.label,
        test_fraction=test_fraction,
        seed=seed,
        threshold=args.threshold if args.threshold is not None else 0.5,
        params=params,
    )
    report = run_benchmark(bench_config, args.out)
    print(f"benchmark complete: report.json, table.txt, table.csv, 8 curve CSVs -> {args.out}")
    for algo, r in report.results.items():
        print(f"  {algo}: test_acc={r.test_accuracy:.4f} auc={r.auc:.4f}")
    return 0


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    schema = _load_schema_arg(args)
    if schema is None:
        schema = pcos_default_schema()
    data = synthesize(schema, args.n, seed, args.signal_strength, args.missing_rate)
    atomic_write_text(args.out, dataset_to_csv_text(data))
    print(f"wrote {data.n_rows} rows -> {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="boostlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit one booster on a CSV and save the model")
    p_train.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_train.add_argument("--data", required=True, help="training CSV")
    p_train.add_argument("--model-out", default="model.json")
    _add_data_flags(p_train)
    _add_param_flags(p_train)

    p_pred = sub.add_parser("predict", help="score rows with a saved model")
    p_pred.add_argument("--model", required=True, help="model JSON file")
    p_pred.add_argument("--data", required=True, help="CSV to score (label column optional)")
    p_pred.add_argument("--scores-out", default="scores.csv")

    p_eval = sub.add_parser("eval", help="metrics and curves from a scores file")
    p_eval.add_argument("--scores", required=True, help="CSV with header 'score'")
    group = p_eval.add_mutually_exclusive_group(required=True)
    group.add_argument("--truth", default=None, help="CSV with header 'label'")
    group.add_argument("--data", default=None, help="labeled dataset CSV")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.add_argument("--threshold", type=float, default=0.5)
    _add_data_flags(p_eval)

    p_cmp = sub.add_parser("compare", help="benchmark all four boosters on one split")
    src = p_cmp.add_mutually_exclusive_group(required=True)
    src.add_argument("--synthetic", action="store_true", help="use the synthetic generator")
    src.add_argument("--data", default=None, help="dataset CSV")
    p_cmp.add_argument("--n", type=int, default=None, help="synthetic row count")
    p_cmp.add_argument("--signal-strength", type=float, default=None)
    p_cmp.add_argument("--missing-rate", type=float, default=None)
    p_cmp.add_argument("--test-fraction", type=float, default=None)
    p_cmp.add_argument("--out", required=True, help="output directory")
    _add_data_flags(p_cmp)
    _add_param_flags(p_cmp)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset CSV")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--signal-strength", type=float, default=2.0)
    p_synth.add_argument("--missing-rate", type=float, default=0.0)
    p_synth.add_argument("--schema", default=None, help="schema JSON file")
    p_synth.add_argument("--out", required=True, help="output CSV path")

    return parser


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"{exc.parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BoostlabError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = exc.filename if exc.filename else ""
        reason = exc.strerror if exc.strerror else str(exc)
        print(f"{args.command}: {name}: {reason}".replace(": :", ":"), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

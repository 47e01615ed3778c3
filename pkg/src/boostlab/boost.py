"""The four boosting algorithms behind one binary-classifier interface.

All models emit per-row scores in [0, 1]: AdaBoost maps twice its additive
margin through a sigmoid, the tree boosters map their raw log-odds score.
Labels are 1 when score >= threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import Dataset, FeatureSchema
from .errors import SchemaMismatch, SingleClassDataset
from .tree import (
    ObliviousTree,
    RegressionTree,
    Stump,
    fit_oblivious_tree,
    fit_regression_tree,
    fit_stump,
    predict_stump,
    tree_from_dict,
    tree_to_dict,
)

ALGORITHMS = ("adaboost", "gbm", "xgboost", "catboost")

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    seed: int = 42
    cat_one_hot_max: int = 2
    cat_prior: float = 0.5
    threshold: float = 0.5

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if not self.learning_rate > 0 or not math.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be positive and finite")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        for name in ("reg_lambda", "gamma", "min_child_weight"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be >= 0 and finite")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.cat_one_hot_max < 1:
            raise ValueError("cat_one_hot_max must be >= 1")
        if not 0.0 < self.cat_prior < 1.0:
            raise ValueError("cat_prior must lie in (0, 1)")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")


_DEPTH_DEFAULTS = {"adaboost": 1, "gbm": 3, "xgboost": 3, "catboost": 6}


def default_params(algorithm: str) -> BoostParams:
    """Per-algorithm defaults: stump depth for AdaBoost, 3 for GBM/XGB, 6 for CatBoost."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return BoostParams(max_depth=_DEPTH_DEFAULTS[algorithm])


def paper_preset(algorithm: str) -> BoostParams:
    """Benchmark preset: GBM learning rate 0.01, CatBoost depth 16, seed 42."""
    params = default_params(algorithm)
    if algorithm == "gbm":
        params = replace(params, learning_rate=0.01)
    if algorithm == "catboost":
        params = replace(params, max_depth=16)
    return params


@dataclass
class AdaBoostModel:
    stumps: list[tuple[Stump, float]]
    schema: FeatureSchema
    params: BoostParams
    train_loss: list[float] = field(default_factory=list, repr=False)

    algorithm = "adaboost"


@dataclass
class GbmModel:
    base_score: float
    trees: list[RegressionTree]
    learning_rate: float
    schema: FeatureSchema
    params: BoostParams
    train_loss: list[float] = field(default_factory=list, repr=False)

    algorithm = "gbm"


@dataclass
class XgbModel(GbmModel):
    algorithm = "xgboost"


@dataclass(frozen=True)
class CategoricalEncoding:
    """Prediction-time treatment of one categorical feature."""

    feature_index: int
    mode: str  # "onehot" | "target"
    cardinality: int
    stats: tuple[float, ...] | None = None  # target mode only


@dataclass
class CatBoostModel:
    base_score: float
    trees: list[ObliviousTree]
    learning_rate: float
    cat_encoding_state: tuple[CategoricalEncoding, ...]
    schema: FeatureSchema
    params: BoostParams
    train_loss: list[float] = field(default_factory=list, repr=False)

    algorithm = "catboost"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def deviance(labels: np.ndarray, raw_scores: np.ndarray) -> float:
    """Mean binomial deviance of sigmoid(raw_scores) against 0/1 labels."""
    signs = np.where(labels == 1, -1.0, 1.0)
    return float(np.mean(np.logaddexp(0.0, signs * raw_scores)))


def _check_two_classes(data: Dataset):
    if data.labels.min() == data.labels.max():
        raise SingleClassDataset("training data contains a single class")


def _base_score(labels: np.ndarray) -> float:
    pos = int(labels.sum())
    return math.log(pos / (labels.size - pos))


def fit_adaboost(train: Dataset, params: BoostParams | None = None) -> AdaBoostModel:
    """Discrete AdaBoost over exact greedy decision stumps.

    Per round: eps = weighted error, alpha = 0.5*ln((1-eps)/eps), misclassified
    weights scale by e^alpha and the rest by e^-alpha, then renormalize. A
    zero-error round gets the capped alpha for eps0 = 1/(2n) and stops early;
    a round at eps >= 0.5 stops without adding a stump.
    """
    params = params if params is not None else default_params("adaboost")
    _check_two_classes(train)
    X = train.values
    kinds = train.schema.kinds
    y = train.signed_labels()
    n = train.n_rows
    w = np.full(n, 1.0 / n)
    margins = np.zeros(n)
    stumps: list[tuple[Stump, float]] = []
    losses: list[float] = []
    eps0 = 1.0 / (2.0 * n)
    for _ in range(params.n_rounds):
        stump, eps = fit_stump(X, y, w, kinds)
        if eps <= 0.0:
            alpha = 0.5 * math.log((1.0 - eps0) / eps0)
            stumps.append((stump, alpha))
            margins = margins + alpha * predict_stump(stump, X)
            losses.append(float(np.mean(np.exp(-y * margins))))
            break
        if eps >= 0.5:
            break
        alpha = 0.5 * math.log((1.0 - eps) / eps)
        stumps.append((stump, alpha))
        pred = predict_stump(stump, X)
        margins = margins + alpha * pred
        w = w * np.exp(-alpha * y * pred)
        w = w / w.sum()
        losses.append(float(np.mean(np.exp(-y * margins))))
    return AdaBoostModel(stumps, train.schema, params, losses)


def _fit_tree_boost(train: Dataset, params: BoostParams, *, second_order: bool):
    """Shared GBM/XGB loop; GBM uses unit hessians, XGB uses p(1-p)."""
    _check_two_classes(train)
    X = train.values
    kinds = train.schema.kinds
    y = train.labels.astype(np.float64)
    base = _base_score(train.labels)
    F = np.full(train.n_rows, base)
    trees: list[RegressionTree] = []
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(F)
        g = p - y
        h = p * (1.0 - p) if second_order else np.ones_like(p)
        tree = fit_regression_tree(
            X,
            g,
            h,
            kinds,
            max_depth=params.max_depth,
            min_child_weight=params.min_child_weight,
            reg_lambda=params.reg_lambda,
            gamma=params.gamma,
        )
        F = F + params.learning_rate * tree.predict(X)
        trees.append(tree)
        losses.append(deviance(train.labels, F))
    return base, trees, losses


def fit_gbm(train: Dataset, params: BoostParams | None = None) -> GbmModel:
    """Gradient boosting on binomial deviance with first-order residual trees."""
    params = params if params is not None else default_params("gbm")
    base, trees, losses = _fit_tree_boost(train, params, second_order=False)
    return GbmModel(base, trees, params.learning_rate, train.schema, params, losses)


def fit_xgb(train: Dataset, params: BoostParams | None = None) -> XgbModel:
    """Second-order boosting with regularized trees and learned missing directions."""
    params = params if params is not None else default_params("xgboost")
    base, trees, losses = _fit_tree_boost(train, params, second_order=True)
    return XgbModel(base, trees, params.learning_rate, train.schema, params, losses)


def ordered_target_stats(
    levels: np.ndarray, labels: np.ndarray, permutation: np.ndarray, prior: float
) -> np.ndarray:
    """Leakage-free mean encoding under a permutation.

    Row i's code for level v is (label-1 count among earlier-in-permutation
    rows with level v + prior) / (count of such rows + 1), so a row's own
    label never enters its own code.
    """
    n = len(levels)
    enc = np.empty(n)
    count: dict[int, int] = {}
    ones: dict[int, int] = {}
    for r in permutation:
        lvl = int(levels[r])
        c = count.get(lvl, 0)
        enc[r] = (ones.get(lvl, 0) + prior) / (c + 1.0)
        count[lvl] = c + 1
        if labels[r] == 1:
            ones[lvl] = ones.get(lvl, 0) + 1
    return enc


def _full_target_stats(
    levels: np.ndarray, labels: np.ndarray, cardinality: int, prior: float
) -> np.ndarray:
    idx = levels.astype(np.int64)
    counts = np.bincount(idx, minlength=cardinality).astype(np.float64)
    ones = np.bincount(idx, weights=labels.astype(np.float64), minlength=cardinality)
    return (ones + prior) / (counts + 1.0)


def _plan_encodings(train: Dataset, params: BoostParams) -> tuple[CategoricalEncoding, ...]:
    encodings = []
    for j, (_, kind) in enumerate(train.schema.columns):
        if not kind.is_categorical:
            continue
        if kind.cardinality <= params.cat_one_hot_max:
            encodings.append(CategoricalEncoding(j, "onehot", kind.cardinality))
        else:
            stats = _full_target_stats(
                train.values[:, j], train.labels, kind.cardinality, params.cat_prior
            )
            encodings.append(
                CategoricalEncoding(j, "target", kind.cardinality, tuple(float(s) for s in stats))
            )
    return tuple(encodings)


def _encode_matrix(
    values: np.ndarray,
    schema: FeatureSchema,
    encodings: tuple[CategoricalEncoding, ...],
    ordered_codes: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Expand categoricals per plan; ordered_codes overrides target-stat columns."""
    by_index = {e.feature_index: e for e in encodings}
    cols = []
    for j in range(schema.n_features):
        col = values[:, j]
        enc = by_index.get(j)
        if enc is None:
            cols.append(col)
        elif enc.mode == "onehot":
            for lvl in range(enc.cardinality):
                cols.append((col == lvl).astype(np.float64))
        elif ordered_codes is not None:
            cols.append(ordered_codes[j])
        else:
            cols.append(np.asarray(enc.stats)[col.astype(np.int64)])
    return np.column_stack(cols)


def fit_catboost(train: Dataset, params: BoostParams | None = None) -> CatBoostModel:
    """Oblivious-tree boosting with CatBoost-style categorical handling.

    Categoricals with cardinality <= cat_one_hot_max are one-hot expanded;
    the rest are replaced by ordered target statistics under one seeded
    permutation during training and by full-training-set statistics at
    prediction time.
    """
    params = params if params is not None else default_params("catboost")
    _check_two_classes(train)
    encodings = _plan_encodings(train, params)
    ordered_codes = None
    target_features = [e.feature_index for e in encodings if e.mode == "target"]
    if target_features:
        permutation = np.random.default_rng(params.seed).permutation(train.n_rows)
        ordered_codes = {
            j: ordered_target_stats(train.values[:, j], train.labels, permutation, params.cat_prior)
            for j in target_features
        }
    Xe = _encode_matrix(train.values, train.schema, encodings, ordered_codes)
    y = train.labels.astype(np.float64)
    base = _base_score(train.labels)
    F = np.full(train.n_rows, base)
    trees: list[ObliviousTree] = []
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(F)
        g = p - y
        h = p * (1.0 - p)
        tree = fit_oblivious_tree(
            Xe, g, h, depth=params.max_depth, reg_lambda=params.reg_lambda
        )
        F = F + params.learning_rate * tree.predict(Xe)
        trees.append(tree)
        losses.append(deviance(train.labels, F))
    return CatBoostModel(
        base, trees, params.learning_rate, encodings, train.schema, params, losses
    )


def fit(algorithm: str, train: Dataset, params: BoostParams | None = None):
    fitters = {
        "adaboost": fit_adaboost,
        "gbm": fit_gbm,
        "xgboost": fit_xgb,
        "catboost": fit_catboost,
    }
    if algorithm not in fitters:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return fitters[algorithm](train, params)


def _check_schema(model, data: Dataset):
    if data.schema.columns != model.schema.columns:
        raise SchemaMismatch("data does not conform to the model's training schema")


def raw_scores(model, data: Dataset) -> np.ndarray:
    """Additive margin (AdaBoost) or log-odds score (tree boosters)."""
    _check_schema(model, data)
    if isinstance(model, AdaBoostModel):
        margins = np.zeros(data.n_rows)
        for stump, alpha in model.stumps:
            margins = margins + alpha * predict_stump(stump, data.values)
        return margins
    if isinstance(model, CatBoostModel):
        Xe = _encode_matrix(data.values, model.schema, model.cat_encoding_state)
    else:
        Xe = data.values
    F = np.full(data.n_rows, model.base_score)
    for tree in model.trees:
        F = F + model.learning_rate * tree.predict(Xe)
    return F


def predict_scores(model, data: Dataset) -> np.ndarray:
    """Per-row probability-like scores in [0, 1]."""
    raw = raw_scores(model, data)
    if isinstance(model, AdaBoostModel):
        return _sigmoid(2.0 * raw)
    return _sigmoid(raw)


def predict_labels(model, data: Dataset, threshold: float | None = None) -> np.ndarray:
    """Hard 0/1 labels; a score exactly at the threshold maps to 1."""
    th = model.params.threshold if threshold is None else threshold
    return (predict_scores(model, data) >= th).astype(np.int64)


def model_to_dict(model) -> dict:
    envelope = {
        "format_version": MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "params": asdict(model.params),
        "schema": model.schema.to_dict(),
    }
    if isinstance(model, AdaBoostModel):
        envelope["base_score"] = 0.0
        envelope["stumps"] = [
            {"stump": tree_to_dict(stump), "alpha": alpha} for stump, alpha in model.stumps
        ]
        envelope["cat_encoding_state"] = None
        return envelope
    envelope["base_score"] = model.base_score
    envelope["trees"] = [tree_to_dict(t) for t in model.trees]
    if isinstance(model, CatBoostModel):
        envelope["cat_encoding_state"] = [
            {
                "feature_index": e.feature_index,
                "mode": e.mode,
                "cardinality": e.cardinality,
                "stats": list(e.stats) if e.stats is not None else None,
            }
            for e in model.cat_encoding_state
        ]
    else:
        envelope["cat_encoding_state"] = None
    return envelope


def model_from_dict(d: dict):
    algorithm = d["algorithm"]
    params = BoostParams(**d["params"])
    schema = FeatureSchema.from_dict(d["schema"])
    if algorithm == "adaboost":
        stumps = [(tree_from_dict(s["stump"]), float(s["alpha"])) for s in d["stumps"]]
        return AdaBoostModel(stumps, schema, params)
    trees = [tree_from_dict(t) for t in d["trees"]]
    if algorithm == "gbm":
        return GbmModel(d["base_score"], trees, params.learning_rate, schema, params)
    if algorithm == "xgboost":
        return XgbModel(d["base_score"], trees, params.learning_rate, schema, params)
    if algorithm == "catboost":
        encodings = tuple(
            CategoricalEncoding(
                e["feature_index"],
                e["mode"],
                e["cardinality"],
                tuple(e["stats"]) if e["stats"] is not None else None,
            )
            for e in d["cat_encoding_state"]
        )
        return CatBoostModel(
            d["base_score"], trees, params.learning_rate, encodings, schema, params
        )
    raise ValueError(f"unknown algorithm {algorithm!r}")


def model_to_json(model) -> str:
    return json.dumps(model_to_dict(model), indent=2)


def save_model(model, path) -> None:
    from ._fileio import atomic_write_text

    atomic_write_text(path, model_to_json(model) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

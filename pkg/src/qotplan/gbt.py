"""Gradient-boosted regression trees with squared-error loss.

Second-order boosting: each tree is grown level by level with an exact greedy
split search over a random feature subset, leaf scores are ``-G / (H + lambda)``
and the ensemble prediction is ``base_score + learning_rate * sum(leaf scores)``.

Split ties go to the lowest feature index, then the lowest threshold, and rows
go left when ``x < threshold``. Models are stored as a versioned JSON dump::

    {"format": "qotplan-gbt", "version": 1, "n_features": 25,
     "base_score": ..., "learning_rate": ..., "hyperparams": {...},
     "trees": [{"feature": [...], "threshold": [...], "left": [...],
                "right": [...], "value": [...], "gain": [...]}, ...]}

Node 0 is the root; leaves have ``feature == -1`` and ``left == right == -1``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from qotplan.config import GbtSettings
from qotplan.errors import ModelError, ModelFormatError
from qotplan.phys import EtaNli

logger = logging.getLogger(__name__)

FORMAT_NAME = "qotplan-gbt"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 400
    max_depth: int = 6
    learning_rate: float = 0.1
    lambda_l2: float = 1.0
    min_child_weight: float = 1.0
    feature_subsample: float = 0.8
    row_subsample: float = 1.0
    patience: int = 30
    min_split_gain: float = 0.0

    @classmethod
    def from_settings(cls, s: GbtSettings) -> "Hyperparams":
        return cls(n_trees=s.n_trees, max_depth=s.max_depth, learning_rate=s.learning_rate,
                   lambda_l2=s.lambda_l2, min_child_weight=s.min_child_weight,
                   feature_subsample=s.feature_subsample, row_subsample=s.row_subsample,
                   patience=s.patience)

    def validate(self) -> None:
        if self.n_trees < 0 or self.max_depth < 0:
            raise ValueError("n_trees and max_depth must be non-negative")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.lambda_l2 < 0 or self.min_child_weight < 0:
            raise ValueError("lambda_l2 and min_child_weight must be non-negative")
        if not (0 < self.feature_subsample <= 1 and 0 < self.row_subsample <= 1):
            raise ValueError("subsample fractions must lie in (0, 1]")


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``x``."""
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return node
            go_left = x[rows, np.where(internal, f, 0)] < self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
        }


def _leaf(value: float = 0.0) -> Tree:
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                np.array([value]), np.array([0.0]))


@dataclass(frozen=True)
class GbtModel:
    trees: tuple[Tree, ...]
    learning_rate: float
    base_score: float
    n_features: int
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        # flat arrays for vectorised traversal of the whole ensemble
        sizes = [t.n_nodes for t in self.trees]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        if self.trees:
            def cat(name):
                return np.concatenate([getattr(t, name) for t in self.trees])
            shift = np.repeat(offsets[:-1], sizes)
            left, right = cat("left"), cat("right")
            flat = (cat("feature"), cat("threshold"),
                    np.where(left >= 0, left + shift, -1), np.where(right >= 0, right + shift, -1),
                    cat("value"))
        else:
            empty = np.zeros(0)
            flat = (empty.astype(np.int64), empty, empty.astype(np.int64), empty.astype(np.int64), empty)
        object.__setattr__(self, "_flat", flat)
        object.__setattr__(self, "_roots", offsets[:-1])
        max_depth = max((_depth(t) for t in self.trees), default=0)
        object.__setattr__(self, "_max_depth", max_depth)


def _depth(tree: Tree) -> int:
    depth = {0: 0}
    for node in range(tree.n_nodes):
        if tree.feature[node] >= 0:
            depth[int(tree.left[node])] = depth[node] + 1
            depth[int(tree.right[node])] = depth[node] + 1
    return max(depth.values())


@dataclass
class TrainReport:
    train_loss: list[float]
    val_loss: list[float]
    best_round: int
    importance: np.ndarray

    @property
    def n_rounds(self) -> int:
        return len(self.train_loss)


def _check_matrix(x: np.ndarray, n_features: Optional[int] = None, what: str = "features") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ModelError(f"{what} must be a 2-D array")
    if n_features is not None and x.shape[1] != n_features:
        raise ModelError(f"{what} have width {x.shape[1]}, model expects {n_features}")
    bad = ~np.isfinite(x).all(axis=1)
    if bad.any():
        raise ModelError(f"{what}: non-finite value in row {int(np.flatnonzero(bad)[0])}")
    return x


def _build_tree(x: np.ndarray, order: np.ndarray, g: np.ndarray, h: np.ndarray,
                in_sample: np.ndarray, features: np.ndarray, hp: Hyperparams) -> Tree:
    lam, mcw = hp.lambda_l2, hp.min_child_weight
    node_of = np.where(in_sample, 0, -1).astype(np.int16)
    feat, thr, left, right, gain = [-1], [0.0], [-1], [-1], [0.0]
    sums = [(float(g[in_sample].sum()), float(h[in_sample].sum()))]
    frontier = [0]
    for _ in range(hp.max_depth):
        if not frontier:
            break
        is_front = np.zeros(len(feat), dtype=bool)
        is_front[frontier] = True
        best: dict[int, tuple] = {}
        for f in features:
            o = order[f]
            nd = node_of[o]
            keep = nd >= 0
            keep[keep] = is_front[nd[keep]]
            o, nd = o[keep], nd[keep]
            if len(o) < 2:
                continue
            grp = np.argsort(nd, kind="stable")
            rows, nd = o[grp], nd[grp]
            xs = x[rows, f]
            cg = np.cumsum(g[rows])
            ch = np.cumsum(h[rows])
            new_seg = np.r_[True, nd[1:] != nd[:-1]]
            starts = np.flatnonzero(new_seg)
            ends = np.r_[starts[1:], len(nd)] - 1
            seg = np.cumsum(new_seg) - 1
            g0 = np.r_[0.0, cg][starts]
            h0 = np.r_[0.0, ch][starts]
            g_tot, h_tot = cg[ends] - g0, ch[ends] - h0
            gl, hl = cg - g0[seg], ch - h0[seg]
            gr, hr = g_tot[seg] - gl, h_tot[seg] - hl
            valid = np.r_[~new_seg[1:] & (xs[1:] > xs[:-1]), False] & (hl >= mcw) & (hr >= mcw)
            with np.errstate(divide="ignore", invalid="ignore"):
                parent = g_tot ** 2 / (h_tot + lam)
                gains = 0.5 * (gl ** 2 / (hl + lam) + gr ** 2 / (hr + lam) - parent[seg])
            gains = np.where(valid, gains, -np.inf)
            seg_max = np.maximum.reduceat(gains, starts)
            for s, node in enumerate(nd[starts]):
                node = int(node)
                floor = best[node][2] if node in best else hp.min_split_gain
                if seg_max[s] > floor:
                    pos = starts[s] + int(np.argmax(gains[starts[s]:ends[s] + 1]))
                    lo, hi = xs[pos], xs[pos + 1]
                    mid = 0.5 * (lo + hi)
                    if not lo < mid:
                        mid = hi
                    best[node] = (int(f), float(mid), float(seg_max[s]),
                                  (float(gl[pos]), float(hl[pos])), (float(gr[pos]), float(hr[pos])))
        next_frontier = []
        for node in frontier:
            if node not in best:
                continue
            f, t, gn, sl, sr = best[node]
            li = len(feat)
            for child_sums in (sl, sr):
                feat.append(-1)
                thr.append(0.0)
                left.append(-1)
                right.append(-1)
                gain.append(0.0)
                sums.append(child_sums)
            feat[node], thr[node], left[node], right[node], gain[node] = f, t, li, li + 1, gn
            next_frontier += [li, li + 1]
        if not next_frontier:
            break
        sf, st = np.array(feat), np.array(thr)
        sl_arr, sr_arr = np.array(left), np.array(right)
        placed = np.flatnonzero(node_of >= 0)
        nodes = node_of[placed]
        moving = sf[nodes] >= 0
        idx, nn = placed[moving], nodes[moving]
        go_left = x[idx, sf[nn]] < st[nn]
        node_of[idx] = np.where(go_left, sl_arr[nn], sr_arr[nn])
        frontier = next_frontier
    value = [0.0 if f >= 0 else -gs / (hs + lam) if hs + lam > 0 else 0.0
             for f, (gs, hs) in zip(feat, sums)]
    return Tree(np.array(feat, dtype=np.int64), np.array(thr), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value), np.array(gain))


def fit(x_train, y_train, x_val=None, y_val=None, hyperparams: Optional[Hyperparams] = None,
        seed: int = 0) -> tuple[GbtModel, TrainReport]:
    """Boost ``n_trees`` trees, stopping early on validation loss if given."""
    hp = Hyperparams() if hyperparams is None else hyperparams
    hp.validate()
    x = _check_matrix(x_train, what="training features")
    y = np.asarray(y_train, dtype=float)
    if len(x) == 0:
        raise ModelError("training set is empty")
    if y.shape != (len(x),):
        raise ModelError("training labels must be a vector matching the feature rows")
    if not np.isfinite(y).all():
        raise ModelError(f"training labels: non-finite value in row {int(np.flatnonzero(~np.isfinite(y))[0])}")
    n, d = x.shape
    has_val = x_val is not None and len(x_val) > 0
    if has_val:
        xv = _check_matrix(x_val, d, what="validation features")
        yv = np.asarray(y_val, dtype=float)
        if yv.shape != (len(xv),) or not np.isfinite(yv).all():
            raise ModelError("validation labels must be finite and match the feature rows")

    rng = np.random.default_rng(seed)
    order = np.argsort(x, axis=0, kind="stable").T.copy()
    n_sub = max(1, int(round(hp.feature_subsample * d)))
    base = float(np.mean(y))
    pred = np.full(n, base)
    pred_val = np.full(len(xv), base) if has_val else None
    h = np.ones(n)
    trees: list[Tree] = []
    train_loss: list[float] = []
    val_loss: list[float] = []
    best_round, best_val = -1, math.inf
    for t in range(hp.n_trees):
        features = np.sort(rng.choice(d, size=n_sub, replace=False))
        if hp.row_subsample < 1.0:
            in_sample = rng.random(n) < hp.row_subsample
        else:
            in_sample = np.ones(n, dtype=bool)
        tree = _build_tree(x, order, pred - y, h, in_sample, features, hp)
        trees.append(tree)
        pred += hp.learning_rate * tree.predict(x)
        loss = float(np.mean((pred - y) ** 2))
        if hp.row_subsample == 1.0 and train_loss:
            assert loss <= train_loss[-1] * (1 + 1e-9) + 1e-300, "boosting round increased training loss"
        train_loss.append(loss)
        if has_val:
            pred_val += hp.learning_rate * tree.predict(xv)
            vl = float(np.mean((pred_val - yv) ** 2))
            val_loss.append(vl)
            if vl < best_val:
                best_val, best_round = vl, t
            elif t - best_round >= hp.patience:
                logger.info("early stop at round %d (best %d)", t, best_round)
                break
    if has_val and best_round >= 0:
        trees = trees[:best_round + 1]
    else:
        best_round = len(trees) - 1
    model = GbtModel(tuple(trees), hp.learning_rate, base, d, hp)
    return model, TrainReport(train_loss, val_loss, best_round, importance(model))


def predict_batch(model: GbtModel, x) -> np.ndarray:
    """Predictions for every row of ``x`` (traverses all trees at once)."""
    x = _check_matrix(np.atleast_2d(x), model.n_features)
    if not model.trees:
        return np.full(len(x), model.base_score)
    feat, thr, left, right, value = model._flat
    node = np.broadcast_to(model._roots, (len(x), len(model.trees))).copy()
    rows = np.arange(len(x))[:, None]
    for _ in range(model._max_depth):
        f = feat[node]
        internal = f >= 0
        go_left = x[rows, np.where(internal, f, 0)] < thr[node]
        node = np.where(internal, np.where(go_left, left[node], right[node]), node)
    return model.base_score + model.learning_rate * value[node].sum(axis=1)


def predict_value(model: GbtModel, features) -> float:
    """Single-row prediction by plain tree walking."""
    x = np.asarray(features, dtype=float)
    if x.shape != (model.n_features,):
        raise ModelError(f"feature vector has shape {x.shape}, model expects ({model.n_features},)")
    if not np.isfinite(x).all():
        raise ModelError("feature vector contains a non-finite value")
    total = 0.0
    for tree in model.trees:
        node = 0
        feat, thr = tree.feature, tree.threshold
        while feat[node] >= 0:
            node = tree.left[node] if x[feat[node]] < thr[node] else tree.right[node]
        total += tree.value[node]
    return model.base_score + model.learning_rate * total


def predict(model: GbtModel, features) -> EtaNli:
    return EtaNli(predict_value(model, features))


def importance(model: GbtModel) -> np.ndarray:
    """Total split gain per feature index."""
    out = np.zeros(model.n_features)
    for tree in model.trees:
        split = tree.feature >= 0
        np.add.at(out, tree.feature[split], tree.gain[split])
    return out


def to_dict(model: GbtModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n_features": model.n_features,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "hyperparams": dataclasses.asdict(model.hyperparams),
        "trees": [t.to_dict() for t in model.trees],
    }


def _tree_from_dict(raw: dict, n_features: int, where: str) -> Tree:
    try:
        arrays = {
            "feature": np.array(raw["feature"], dtype=np.int64),
            "threshold": np.array(raw["threshold"], dtype=float),
            "left": np.array(raw["left"], dtype=np.int64),
            "right": np.array(raw["right"], dtype=np.int64),
            "value": np.array(raw["value"], dtype=float),
            "gain": np.array(raw["gain"], dtype=float),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{where}: malformed tree ({exc})") from None
    n = len(arrays["feature"])
    if n == 0 or any(a.ndim != 1 or len(a) != n for a in arrays.values()):
        raise ModelFormatError(f"{where}: tree arrays are empty or of unequal length")
    feat, left, right = arrays["feature"], arrays["left"], arrays["right"]
    internal = feat >= 0
    if (feat >= n_features).any() or (feat < -1).any():
        raise ModelFormatError(f"{where}: split feature index out of range")
    children = np.concatenate([left[internal], right[internal]])
    if (children <= 0).any() or (children >= n).any() or (left[~internal] != -1).any():
        raise ModelFormatError(f"{where}: invalid child index")
    return Tree(**arrays)


def from_dict(raw: dict) -> GbtModel:
    if not isinstance(raw, dict) or raw.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"not a {FORMAT_NAME} model file")
    if raw.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {raw.get('version')!r} (this build reads version {FORMAT_VERSION})")
    try:
        n_features = int(raw["n_features"])
        hp_raw = raw.get("hyperparams", {})
        known = {f.name for f in dataclasses.fields(Hyperparams)}
        hp = Hyperparams(**{k: v for k, v in hp_raw.items() if k in known})
        trees = tuple(_tree_from_dict(t, n_features, f"tree {i}") for i, t in enumerate(raw["trees"]))
        return GbtModel(trees, float(raw["learning_rate"]), float(raw["base_score"]), n_features, hp)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file ({exc})") from None


def save(model: GbtModel, path: str | Path, metadata: Optional[dict[str, object]] = None) -> None:
    """Write the model; ``metadata`` (e.g. the training config) is stored alongside."""
    raw = to_dict(model)
    if metadata:
        raw["metadata"] = {str(k): str(v) for k, v in metadata.items()}
    with open(path, "w") as fh:
        json.dump(raw, fh, separators=(",", ":"))
        fh.write("\n")


def load(path: str | Path) -> GbtModel:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc.msg} at char {exc.pos})") from None
    return from_dict(raw)


def write_report(report: TrainReport, path: str | Path,
                 feature_names: Optional[Sequence[str]] = None,
                 header: Optional[dict[str, object]] = None) -> None:
    """Per-round losses, then the importance table, as one CSV with two blocks."""
    names = feature_names or [f"f{i}" for i in range(len(report.importance))]
    with open(path, "w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key} = {value}\n")
        fh.write(f"# best_round = {report.best_round}\n")
        w = csv.writer(fh)
        w.writerow(["round", "train_mse", "val_mse"])
        for i, tl in enumerate(report.train_loss):
            vl = report.val_loss[i] if i < len(report.val_loss) else ""
            w.writerow([i, repr(tl), repr(vl) if vl != "" else ""])
        fh.write("\n")
        w.writerow(["feature", "gain"])
        for name, g in zip(names, report.importance):
            w.writerow([name, repr(float(g))])


def group_folds(groups: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    """Row-index arrays of ``n_folds`` folds that never split a group."""
    ids = np.unique(groups)
    if len(ids) < n_folds:
        raise ValueError("fewer groups than folds")
    perm = np.random.default_rng(seed).permutation(ids)
    fold_of = {g: i % n_folds for i, g in enumerate(perm)}
    assign = np.array([fold_of[g] for g in groups])
    return [np.flatnonzero(assign == k) for k in range(n_folds)]


def cross_validate(x, y, groups, hyperparams: Hyperparams, n_folds: int = 5,
                   seed: int = 0) -> list[float]:
    """Held-out RMSE of each fold under group k-fold (no early stopping)."""
    x, y, groups = np.asarray(x, float), np.asarray(y, float), np.asarray(groups)
    scores = []
    for k, test_idx in enumerate(group_folds(groups, n_folds, seed)):
        mask = np.ones(len(x), dtype=bool)
        mask[test_idx] = False
        model, _ = fit(x[mask], y[mask], hyperparams=hyperparams, seed=seed + k)
        err = predict_batch(model, x[test_idx]) - y[test_idx]
        scores.append(float(np.sqrt(np.mean(err ** 2))))
    return scores


def grid_search(x, y, groups, candidates: Iterable[Hyperparams], n_folds: int = 5,
                seed: int = 0) -> list[tuple[Hyperparams, float]]:
    """Mean CV RMSE for each candidate, best first."""
    results = [(hp, float(np.mean(cross_validate(x, y, groups, hp, n_folds, seed))))
               for hp in candidates]
    return sorted(results, key=lambda item: item[1])

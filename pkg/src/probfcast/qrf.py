"""Quantile regression forest over (lead_hours, model_label).

Each tree grows on its own seeded random subsample of the error table and
splits by minimising the size-weighted sum of child response variances.  The
numeric covariate is searched over midpoints between consecutive distinct
in-node values; the categorical covariate is handled by ordering the node's
labels by mean response and searching that ordering as if numeric, which is
exactly equivalent to searching all binary label partitions under the
variance rule.  Leaves keep the in-bag rows that reached them, so a query
returns a weighted empirical distribution of training errors rather than a
mean: row weights average, over trees, the indicator of sharing the query's
leaf divided by the leaf size.

Determinism: tree t uses ``numpy.random.default_rng(seed + t)``, consuming
draws in a fixed order (subsample first, then one covariate draw per split
in depth-first, left-first order), so forests reproduce bit-for-bit across
runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .combine import QuantileVector
from .error_model import ErrorTable
from .exceptions import ConfigError, DataError

__all__ = [
    "ForestConfig",
    "CovariateVector",
    "Forest",
    "OOBCoverage",
    "train",
    "predict_weights",
    "predict_quantiles",
    "predict_quantiles_batch",
    "oob_coverage",
    "save_forest",
    "load_forest",
]

_N_COVARIATES = 2  # lead_hours (0), model_label (1)

DEFAULT_OOB_INTERVALS = (0.5, 0.8, 0.9, 0.95)

FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 250
    mtry: int = 1
    min_node_size: int = 1
    sample_count: int = 128
    seed: int = 0
    replace: bool = False

    def validate(self, n_rows: int) -> None:
        if self.num_trees < 1:
            raise ConfigError("num_trees must be >= 1")
        if not 1 <= self.mtry <= _N_COVARIATES:
            raise ConfigError(f"mtry must lie in [1, {_N_COVARIATES}]")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be >= 1")
        if self.sample_count < 1:
            raise ConfigError("sample_count must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.replace and self.sample_count > n_rows:
            raise ConfigError(
                f"sample_count {self.sample_count} exceeds table size {n_rows} "
                "with replace=False"
            )


@dataclass(frozen=True)
class CovariateVector:
    lead_hours: int
    model_label: str


@dataclass(eq=False)
class _Tree:
    """Array-encoded tree: feature -1 marks a leaf, 0 a lead split, 1 a label split."""

    feature: np.ndarray  # int8 per node
    threshold: np.ndarray  # float64: lead midpoint for feature==0
    cat_index: np.ndarray  # int32: row of cat_left for feature==1, else -1
    left: np.ndarray  # int32 child node ids
    right: np.ndarray
    leaf_start: np.ndarray  # int32 into leaf_rows (leaves only)
    leaf_count: np.ndarray  # int32
    leaf_rows: np.ndarray  # int32 global table row ids, grouped by leaf
    cat_left: np.ndarray  # bool (n_label_splits, n_labels); True = go left
    inbag: np.ndarray  # int32 sampled row ids (with multiplicity if replace)


@dataclass(eq=False)
class Forest:
    config: ForestConfig
    table: ErrorTable
    trees: List[_Tree]
    _code: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._code = {lab: i for i, lab in enumerate(self.table.label_set)}

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    def label_code(self, label: str) -> int:
        try:
            return self._code[label]
        except KeyError:
            raise KeyError(f"model label {label!r} was not in the training table") from None


@dataclass(eq=False)
class OOBCoverage:
    """Out-of-bag interval coverage per observed lead hour."""

    lead_hours: np.ndarray  # sorted observed lead hours with >= 1 scored row
    n_rows: np.ndarray  # scored rows per lead hour
    coverage: np.ndarray  # (n_leads, n_intervals) hit fractions
    intervals: Tuple[float, ...]
    skipped: int  # rows that were in-bag in every tree


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _best_numeric_split(x: np.ndarray, y: np.ndarray, mns: int):
    order = np.argsort(x)
    xs = x[order]
    ys = y[order]
    cut = np.flatnonzero(xs[:-1] != xs[1:]) + 1  # candidate left-child sizes
    if mns > 1:
        cut = cut[(cut >= mns) & (xs.size - cut >= mns)]
    if cut.size == 0:
        return None
    c1 = np.cumsum(ys)
    c2 = np.cumsum(ys * ys)
    n_left = cut.astype(float)
    n_right = xs.size - n_left
    s_left = c1[cut - 1]
    q_left = c2[cut - 1]
    cost = (q_left - s_left * s_left / n_left) + (
        (c2[-1] - q_left) - (c1[-1] - s_left) ** 2 / n_right
    )
    k = int(np.argmin(cost))  # first minimum: smallest threshold wins ties
    thr = 0.5 * (xs[cut[k] - 1] + xs[cut[k]])
    return float(cost[k]), thr


def _best_label_split(codes: np.ndarray, y: np.ndarray, mns: int, n_labels: int):
    cats, inv = np.unique(codes, return_inverse=True)
    if cats.size < 2:
        return None
    counts = np.bincount(inv)
    means = np.bincount(inv, weights=y) / counts
    cat_order = np.argsort(means, kind="stable")  # ties: lower label code first
    pos = np.empty(cats.size, dtype=np.int64)
    pos[cat_order] = np.arange(cats.size)
    rank = pos[inv]
    order = np.argsort(rank)
    rs = rank[order]
    ys = y[order]
    cut = np.flatnonzero(rs[:-1] != rs[1:]) + 1
    if mns > 1:
        cut = cut[(cut >= mns) & (rs.size - cut >= mns)]
    if cut.size == 0:
        return None
    c1 = np.cumsum(ys)
    c2 = np.cumsum(ys * ys)
    n_left = cut.astype(float)
    n_right = rs.size - n_left
    s_left = c1[cut - 1]
    q_left = c2[cut - 1]
    cost = (q_left - s_left * s_left / n_left) + (
        (c2[-1] - q_left) - (c1[-1] - s_left) ** 2 / n_right
    )
    k = int(np.argmin(cost))  # first minimum: smallest left group wins ties
    left_mask = np.zeros(n_labels, dtype=bool)
    left_mask[cats[cat_order[: rs[cut[k] - 1] + 1]]] = True
    return float(cost[k]), left_mask


def _grow_tree(
    leads: np.ndarray,
    codes: np.ndarray,
    errors: np.ndarray,
    inbag: np.ndarray,
    n_labels: int,
    mtry: int,
    min_node_size: int,
    rng: np.random.Generator,
) -> _Tree:
    lead_l = leads[inbag].astype(float)
    code_l = codes[inbag]
    y_l = errors[inbag]

    feature: List[int] = []
    threshold: List[float] = []
    cat_index: List[int] = []
    left: List[int] = []
    right: List[int] = []
    leaf_start: List[int] = []
    leaf_count: List[int] = []
    cat_masks: List[np.ndarray] = []
    leaf_chunks: List[np.ndarray] = []
    leaf_offset = 0

    def new_node() -> int:
        feature.append(-1)
        threshold.append(np.nan)
        cat_index.append(-1)
        left.append(-1)
        right.append(-1)
        leaf_start.append(-1)
        leaf_count.append(0)
        return len(feature) - 1

    def make_leaf(idx: int, rows: np.ndarray) -> None:
        nonlocal leaf_offset
        leaf_start[idx] = leaf_offset
        leaf_count[idx] = rows.size
        leaf_offset += rows.size
        leaf_chunks.append(inbag[rows])

    def build(rows: np.ndarray) -> int:
        idx = new_node()
        y = y_l[rows]
        if rows.size < 2 * min_node_size or y.min() == y.max():
            make_leaf(idx, rows)
            return idx
        feats = rng.choice(_N_COVARIATES, size=mtry, replace=False)
        best_cost = np.inf
        best = None
        for f in sorted(feats):
            if f == 0:
                res = _best_numeric_split(lead_l[rows], y, min_node_size)
            else:
                res = _best_label_split(code_l[rows], y, min_node_size, n_labels)
            if res is not None and res[0] < best_cost:
                best_cost = res[0]
                best = (int(f), res[1])
        if best is None:
            make_leaf(idx, rows)
            return idx
        f, payload = best
        if f == 0:
            feature[idx] = 0
            threshold[idx] = payload
            go_left = lead_l[rows] <= payload
        else:
            feature[idx] = 1
            cat_index[idx] = len(cat_masks)
            cat_masks.append(payload)
            go_left = payload[code_l[rows]]
        left[idx] = build(rows[go_left])
        right[idx] = build(rows[~go_left])
        return idx

    build(np.arange(inbag.size))
    cat_left = (
        np.vstack(cat_masks) if cat_masks else np.zeros((0, n_labels), dtype=bool)
    )
    return _Tree(
        feature=np.array(feature, dtype=np.int8),
        threshold=np.array(threshold, dtype=float),
        cat_index=np.array(cat_index, dtype=np.int32),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        leaf_start=np.array(leaf_start, dtype=np.int32),
        leaf_count=np.array(leaf_count, dtype=np.int32),
        leaf_rows=(
            np.concatenate(leaf_chunks).astype(np.int32)
            if leaf_chunks
            else np.empty(0, dtype=np.int32)
        ),
        cat_left=cat_left,
        inbag=inbag.astype(np.int32),
    )


def train(table: ErrorTable, config: ForestConfig) -> Forest:
    """Grow a forest on an error table; deterministic given (table, config)."""
    if table.n_rows == 0:
        raise DataError("cannot train on an empty error table")
    config.validate(table.n_rows)
    n_labels = len(table.label_set)
    trees: List[_Tree] = []
    for t in range(config.num_trees):
        rng = np.random.default_rng(config.seed + t)
        inbag = rng.choice(table.n_rows, size=config.sample_count, replace=config.replace)
        trees.append(
            _grow_tree(
                table.lead_hours,
                table.label_codes,
                table.errors,
                inbag.astype(np.int64),
                n_labels,
                config.mtry,
                config.min_node_size,
                rng,
            )
        )
    return Forest(config=config, table=table, trees=trees)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def _route(tree: _Tree, lead_q: np.ndarray, code_q: np.ndarray) -> np.ndarray:
    """Vectorised descent: leaf node id for each query."""
    node = np.zeros(lead_q.size, dtype=np.int64)
    while True:
        f = tree.feature[node]
        active = f >= 0
        if not active.any():
            return node
        m = active & (f == 0)
        if m.any():
            nid = node[m]
            go = lead_q[m] <= tree.threshold[nid]
            node[m] = np.where(go, tree.left[nid], tree.right[nid])
        m = active & (f == 1)
        if m.any():
            nid = node[m]
            go = tree.cat_left[tree.cat_index[nid], code_q[m]]
            node[m] = np.where(go, tree.left[nid], tree.right[nid])


def _check_levels(levels: np.ndarray) -> np.ndarray:
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if levels.size == 0:
        raise ValueError("levels must be non-empty")
    if levels[0] <= 0.0 or levels[-1] >= 1.0 or np.any(np.diff(levels) <= 0):
        raise ValueError("levels must be strictly increasing within (0, 1)")
    return levels


def predict_weights(forest: Forest, x: CovariateVector) -> np.ndarray:
    """Per-training-row weights at covariates x; non-negative, summing to 1."""
    code = forest.label_code(x.model_label)
    lead_q = np.array([float(x.lead_hours)])
    code_q = np.array([code], dtype=np.int64)
    w = np.zeros(forest.table.n_rows)
    for tree in forest.trees:
        leaf = int(_route(tree, lead_q, code_q)[0])
        start = tree.leaf_start[leaf]
        count = tree.leaf_count[leaf]
        rows = tree.leaf_rows[start : start + count]
        np.add.at(w, rows, 1.0 / count)
    return w / forest.num_trees


def _gather_ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Flat indices covering source[starts[i] : starts[i]+counts[i]] per i."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    reps = np.repeat(np.arange(starts.size), counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return starts[reps] + offsets


def _weighted_quantiles(values: np.ndarray, cum_w: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Smallest value whose cumulative weight reaches each target."""
    idx = np.searchsorted(cum_w, targets, side="left")
    return values[np.minimum(idx, values.size - 1)]


def predict_quantiles(
    forest: Forest, x: CovariateVector, levels: Sequence[float]
) -> QuantileVector:
    """Weighted empirical quantiles of the training errors at covariates x."""
    levels = _check_levels(np.asarray(levels))
    code = forest.label_code(x.model_label)
    lead_q = np.array([float(x.lead_hours)])
    code_q = np.array([code], dtype=np.int64)
    vals: List[np.ndarray] = []
    wts: List[np.ndarray] = []
    for tree in forest.trees:
        leaf = int(_route(tree, lead_q, code_q)[0])
        start = tree.leaf_start[leaf]
        count = int(tree.leaf_count[leaf])
        rows = tree.leaf_rows[start : start + count]
        vals.append(forest.table.errors[rows])
        wts.append(np.full(count, 1.0 / count))
    v = np.concatenate(vals)
    w = np.concatenate(wts)
    order = np.argsort(v, kind="stable")
    cw = np.cumsum(w[order])
    out = _weighted_quantiles(v[order], cw, levels * forest.num_trees)
    return QuantileVector(levels, out)


def predict_quantiles_batch(
    forest: Forest,
    lead_hours: Sequence[int],
    labels: Sequence[str],
    levels: Sequence[float],
) -> np.ndarray:
    """Quantiles for many covariate vectors at once; returns (n_queries, n_levels)."""
    levels = _check_levels(np.asarray(levels))
    lead_q = np.asarray(lead_hours, dtype=float)
    code_q = np.array([forest.label_code(lab) for lab in labels], dtype=np.int64)
    if lead_q.size != code_q.size:
        raise ValueError("lead_hours and labels must have the same length")
    nq = lead_q.size
    qi_parts: List[np.ndarray] = []
    vv_parts: List[np.ndarray] = []
    ww_parts: List[np.ndarray] = []
    for tree in forest.trees:
        leaf = _route(tree, lead_q, code_q)
        starts = tree.leaf_start[leaf].astype(np.int64)
        counts = tree.leaf_count[leaf].astype(np.int64)
        flat = _gather_ranges(starts, counts)
        qi_parts.append(np.repeat(np.arange(nq), counts))
        vv_parts.append(forest.table.errors[tree.leaf_rows[flat]])
        ww_parts.append(np.repeat(1.0 / counts, counts))
    qi = np.concatenate(qi_parts)
    vv = np.concatenate(vv_parts)
    ww = np.concatenate(ww_parts)
    order = np.lexsort((vv, qi))
    qi, vv, ww = qi[order], vv[order], ww[order]
    bounds = np.searchsorted(qi, np.arange(nq + 1))
    targets = levels * forest.num_trees
    out = np.empty((nq, levels.size))
    for i in range(nq):
        s, e = bounds[i], bounds[i + 1]
        cw = np.cumsum(ww[s:e])
        out[i] = _weighted_quantiles(vv[s:e], cw, targets)
    return out


# ---------------------------------------------------------------------------
# Out-of-bag diagnostics
# ---------------------------------------------------------------------------


def oob_coverage(
    forest: Forest,
    table: ErrorTable | None = None,
    intervals: Sequence[float] = DEFAULT_OOB_INTERVALS,
) -> OOBCoverage:
    """Central-interval coverage of out-of-bag predictions, per lead hour.

    Each training row is predicted using only the trees where it is
    out-of-bag; the row scores a hit for an interval when its error lies
    within [q_(1-w)/2, q_(1+w)/2].  Rows in-bag in every tree are skipped and
    counted.  Lead hours with no scorable rows are simply absent.
    """
    if table is None:
        table = forest.table
    if table is not forest.table and table.n_rows != forest.table.n_rows:
        raise ValueError("table does not match the forest's training table")
    intervals = tuple(float(w) for w in intervals)
    for w in intervals:
        if not 0.0 < w < 1.0:
            raise ValueError("interval widths must lie in (0, 1)")
    level_list = sorted({(1.0 - w) / 2.0 for w in intervals} | {(1.0 + w) / 2.0 for w in intervals})
    levels = np.array(level_list)
    pair_idx = [
        (level_list.index((1.0 - w) / 2.0), level_list.index((1.0 + w) / 2.0))
        for w in intervals
    ]

    n_labels = len(table.label_set)
    T = forest.num_trees
    key = table.lead_hours * n_labels + table.label_codes
    uniq, combo_of_row = np.unique(key, return_inverse=True)
    lead_u = (uniq // n_labels).astype(float)
    code_u = (uniq % n_labels).astype(np.int64)
    ncombo = uniq.size

    # Stack every tree's leaf contribution for every distinct covariate combo.
    qi_parts: List[np.ndarray] = []
    vv_parts: List[np.ndarray] = []
    ww_parts: List[np.ndarray] = []
    tt_parts: List[np.ndarray] = []
    for t, tree in enumerate(forest.trees):
        leaf = _route(tree, lead_u, code_u)
        starts = tree.leaf_start[leaf].astype(np.int64)
        counts = tree.leaf_count[leaf].astype(np.int64)
        flat = _gather_ranges(starts, counts)
        qi_parts.append(np.repeat(np.arange(ncombo), counts))
        vv_parts.append(table.errors[tree.leaf_rows[flat]])
        ww_parts.append(np.repeat(1.0 / counts, counts))
        tt_parts.append(np.full(int(counts.sum()), t, dtype=np.int32))
    qi = np.concatenate(qi_parts)
    vv = np.concatenate(vv_parts)
    ww = np.concatenate(ww_parts)
    tt = np.concatenate(tt_parts)
    order = np.lexsort((vv, qi))
    qi, vv, ww, tt = qi[order], vv[order], ww[order], tt[order]
    combo_bounds = np.searchsorted(qi, np.arange(ncombo + 1))

    # In-bag tree ids per training row (deduplicated for replace=True).
    pair_rows = np.concatenate([np.unique(tree.inbag) for tree in forest.trees])
    pair_trees = np.concatenate(
        [
            np.full(np.unique(tree.inbag).size, t, dtype=np.int64)
            for t, tree in enumerate(forest.trees)
        ]
    )
    row_order = np.argsort(pair_rows, kind="stable")
    pair_rows = pair_rows[row_order]
    pair_trees = pair_trees[row_order]
    row_bounds = np.searchsorted(pair_rows, np.arange(table.n_rows + 1))

    full_targets = levels * T
    lo_idx = np.array([p[0] for p in pair_idx])
    hi_idx = np.array([p[1] for p in pair_idx])
    rows_by_combo: List[List[int]] = [[] for _ in range(ncombo)]
    for r, c in enumerate(combo_of_row):
        rows_by_combo[c].append(r)

    scored_lead: List[int] = []
    hit_rows: List[np.ndarray] = []
    skipped = 0
    for c in range(ncombo):
        s, e = combo_bounds[c], combo_bounds[c + 1]
        c_vals = vv[s:e]
        c_w = ww[s:e]
        c_trees = tt[s:e]
        full_q = None
        for r in rows_by_combo[c]:
            rb, re = row_bounds[r], row_bounds[r + 1]
            k = re - rb
            if k == T:
                skipped += 1
                continue
            if k == 0:
                if full_q is None:
                    full_q = _weighted_quantiles(c_vals, np.cumsum(c_w), full_targets)
                q = full_q
            else:
                excl = pair_trees[rb:re]
                keep = ~np.isin(c_trees, excl)
                q = _weighted_quantiles(
                    c_vals[keep], np.cumsum(c_w[keep]), levels * (T - k)
                )
            err = table.errors[r]
            hit_rows.append((q[lo_idx] <= err) & (err <= q[hi_idx]))
            scored_lead.append(int(table.lead_hours[r]))
    if not hit_rows:
        raise DataError("no out-of-bag rows to score")
    hits = np.vstack(hit_rows)
    leads = np.asarray(scored_lead)
    uniq_leads = np.unique(leads)
    n_rows = np.zeros(uniq_leads.size, dtype=np.int64)
    cov = np.zeros((uniq_leads.size, len(intervals)))
    pos = np.searchsorted(uniq_leads, leads)
    np.add.at(n_rows, pos, 1)
    np.add.at(cov, pos, hits)
    cov /= n_rows[:, None]
    return OOBCoverage(
        lead_hours=uniq_leads,
        n_rows=n_rows,
        coverage=cov,
        intervals=intervals,
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def save_forest(path: str | Path, forest: Forest) -> Path:
    """Serialise a forest to a self-describing .npz archive."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(path.suffix + ".npz")
    trees = forest.trees
    node_counts = np.array([t.feature.size for t in trees], dtype=np.int64)
    leafrow_counts = np.array([t.leaf_rows.size for t in trees], dtype=np.int64)
    cat_counts = np.array([t.cat_left.shape[0] for t in trees], dtype=np.int64)
    inbag_counts = np.array([t.inbag.size for t in trees], dtype=np.int64)
    n_labels = len(forest.table.label_set)
    cat_left = (
        np.vstack([t.cat_left for t in trees])
        if cat_counts.sum()
        else np.zeros((0, n_labels), dtype=bool)
    )
    np.savez_compressed(
        path,
        format_version=np.int64(FOREST_FORMAT_VERSION),
        cfg_num_trees=np.int64(forest.config.num_trees),
        cfg_mtry=np.int64(forest.config.mtry),
        cfg_min_node_size=np.int64(forest.config.min_node_size),
        cfg_sample_count=np.int64(forest.config.sample_count),
        cfg_seed=np.int64(forest.config.seed),
        cfg_replace=np.bool_(forest.config.replace),
        labels=np.array(forest.table.label_set, dtype=np.str_),
        table_lead=forest.table.lead_hours,
        table_code=forest.table.label_codes,
        table_error=forest.table.errors,
        table_skipped=np.int64(forest.table.skipped),
        node_counts=node_counts,
        leafrow_counts=leafrow_counts,
        cat_counts=cat_counts,
        inbag_counts=inbag_counts,
        feature=np.concatenate([t.feature for t in trees]),
        threshold=np.concatenate([t.threshold for t in trees]),
        cat_index=np.concatenate([t.cat_index for t in trees]),
        left=np.concatenate([t.left for t in trees]),
        right=np.concatenate([t.right for t in trees]),
        leaf_start=np.concatenate([t.leaf_start for t in trees]),
        leaf_count=np.concatenate([t.leaf_count for t in trees]),
        leaf_rows=np.concatenate([t.leaf_rows for t in trees]),
        cat_left=cat_left,
        inbag=np.concatenate([t.inbag for t in trees]),
    )
    return path


def load_forest(path: str | Path) -> Forest:
    """Load a forest saved by :func:`save_forest`; round-trips bit-exactly."""
    with np.load(path) as z:
        version = int(z["format_version"])
        if version != FOREST_FORMAT_VERSION:
            raise DataError(f"unsupported forest format version {version}")
        config = ForestConfig(
            num_trees=int(z["cfg_num_trees"]),
            mtry=int(z["cfg_mtry"]),
            min_node_size=int(z["cfg_min_node_size"]),
            sample_count=int(z["cfg_sample_count"]),
            seed=int(z["cfg_seed"]),
            replace=bool(z["cfg_replace"]),
        )
        table = ErrorTable(
            lead_hours=z["table_lead"],
            label_codes=z["table_code"],
            errors=z["table_error"],
            label_set=tuple(str(s) for s in z["labels"]),
            skipped=int(z["table_skipped"]),
        )
        node_off = np.concatenate([[0], np.cumsum(z["node_counts"])])
        leafrow_off = np.concatenate([[0], np.cumsum(z["leafrow_counts"])])
        cat_off = np.concatenate([[0], np.cumsum(z["cat_counts"])])
        inbag_off = np.concatenate([[0], np.cumsum(z["inbag_counts"])])
        trees: List[_Tree] = []
        for t in range(config.num_trees):
            ns, ne = node_off[t], node_off[t + 1]
            trees.append(
                _Tree(
                    feature=z["feature"][ns:ne],
                    threshold=z["threshold"][ns:ne],
                    cat_index=z["cat_index"][ns:ne],
                    left=z["left"][ns:ne],
                    right=z["right"][ns:ne],
                    leaf_start=z["leaf_start"][ns:ne],
                    leaf_count=z["leaf_count"][ns:ne],
                    leaf_rows=z["leaf_rows"][leafrow_off[t] : leafrow_off[t + 1]],
                    cat_left=z["cat_left"][cat_off[t] : cat_off[t + 1]],
                    inbag=z["inbag"][inbag_off[t] : inbag_off[t + 1]],
                )
            )
    return Forest(config=config, table=table, trees=trees)

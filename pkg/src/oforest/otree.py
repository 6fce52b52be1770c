"""Oblique decision trees with an MSE split criterion.

Two induction schemes share one structure:

* HHCART: per node, reflect the node samples so an extracted direction lands
  on the first coordinate axis, search axis-parallel splits in both the
  reflected and the original space, and keep the better (axis-parallel wins
  ties).  One reflection per node; searching every reflected column recovers
  the generality a different target axis would provide.
* RandCART: one random orthogonal rotation per tree (QR of a Gaussian
  matrix); every split is an axis-parallel search in the rotated space.

Routing is ``<w, x> >= b`` to the right branch; ties go right.  Node weights
live in the full feature space as (index, value) pairs, zero outside the
tree's feature subset, so constraint assembly needs no remapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, EmptyData, UnknownLeaf
from .numkit import Rng, gaussian_matrix, householder, qr_orthogonal
from .transforms import extract_direction

MIN_SCORE = 1e-12


@dataclass
class ObliqueNode:
    node_id: int
    w_idx: np.ndarray | None = None   # full-space feature indices
    w_val: np.ndarray | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    leaf_id: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf_id is not None


@dataclass
class SignedPath:
    steps: list[tuple[int, int]]      # (node_id, sign); +1 = right branch
    terminal_leaf: int


@dataclass
class TreeFitParams:
    max_depth: int
    transform: str = "eig"            # HHCART only
    min_samples_split: int = 2        # fixed

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


@dataclass
class ObliqueTree:
    nodes: list[ObliqueNode]
    root: int
    depth: int
    leaf_count: int
    feature_subset: np.ndarray        # sorted full-space indices
    kind: str                         # "hhcart" | "randcart"
    rotation: np.ndarray | None = None

    @property
    def node_count(self) -> int:
        return len(self.nodes)


def best_axis_split(x_col: np.ndarray, y: np.ndarray):
    """Best threshold on one column by variance reduction.

    Candidates are midpoints of consecutive distinct sorted values; the score
    is parent SSE minus the two child SSEs.  Returns ``(threshold, score)``
    for the max-score candidate (smallest threshold on ties) or None when no
    candidate improves by more than 1e-12.
    """
    x_col = np.asarray(x_col, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x_col.shape[0]
    if n < 2:
        return None
    order = np.argsort(x_col, kind="stable")
    xs = x_col[order]
    ys = y[order]
    t1 = float(ys.sum())
    t2 = float((ys * ys).sum())
    total = t2 - t1 * t1 / n
    s1 = np.cumsum(ys)[:-1]
    s2 = np.cumsum(ys * ys)[:-1]
    cnt_l = np.arange(1, n, dtype=float)
    sse_l = np.maximum(s2 - s1 * s1 / cnt_l, 0.0)
    sse_r = np.maximum((t2 - s2) - (t1 - s1) ** 2 / (n - cnt_l), 0.0)
    score = total - sse_l - sse_r
    thr = 0.5 * (xs[:-1] + xs[1:])
    # thr must land strictly above the left value so the scored partition is
    # the one ">= thr" actually produces (midpoint may round to an endpoint)
    valid = (xs[1:] > xs[:-1]) & (thr > xs[:-1])
    if not np.any(valid):
        return None
    score = np.where(valid, score, -np.inf)
    best = int(np.argmax(score))  # first max = smallest threshold on ties
    if score[best] <= MIN_SCORE:
        return None
    return float(thr[best]), float(score[best])


def _search_columns(x: np.ndarray, y: np.ndarray):
    """Best split over all columns: (score, col, threshold) or None.

    Ties across columns keep the smallest column index.
    """
    best = None
    for j in range(x.shape[1]):
        r = best_axis_split(x[:, j], y)
        if r is None:
            continue
        thr, score = r
        if best is None or score > best[0]:
            best = (score, j, thr)
    return best


def _sse(y: np.ndarray) -> float:
    yc = y - y.mean()
    return float(yc @ yc)


class _TreeBuilder:
    def __init__(self, x, y, params: TreeFitParams, feature_subset: np.ndarray):
        self.x = x
        self.y = y
        self.params = params
        self.feature_subset = feature_subset
        self.nodes: list[ObliqueNode] = []
        self.leaf_count = 0
        self.depth = 0

    def make_leaf(self, depth: int) -> int:
        nid = len(self.nodes)
        self.nodes.append(ObliqueNode(node_id=nid, leaf_id=self.leaf_count))
        self.leaf_count += 1
        self.depth = max(self.depth, depth)
        return nid

    def make_internal(self, w_sub: np.ndarray, threshold: float) -> int:
        nz = np.nonzero(w_sub)[0]
        nid = len(self.nodes)
        self.nodes.append(ObliqueNode(
            node_id=nid,
            w_idx=self.feature_subset[nz].copy(),
            w_val=np.asarray(w_sub[nz], dtype=float).copy(),
            threshold=float(threshold),
        ))
        return nid

    def grow(self, rows: np.ndarray, depth: int, find_split) -> int:
        y = self.y[rows]
        if (depth >= self.params.max_depth
                or rows.shape[0] < self.params.min_samples_split
                or _sse(y) < MIN_SCORE):
            return self.make_leaf(depth)
        split = find_split(rows)
        if split is None:
            return self.make_leaf(depth)
        w_sub, threshold, go_right = split
        nid = self.make_internal(w_sub, threshold)
        left = self.grow(rows[~go_right], depth + 1, find_split)
        right = self.grow(rows[go_right], depth + 1, find_split)
        self.nodes[nid].left = left
        self.nodes[nid].right = right
        return nid

    def finish(self, kind: str, rotation: np.ndarray | None) -> ObliqueTree:
        return ObliqueTree(
            nodes=self.nodes, root=0, depth=self.depth,
            leaf_count=self.leaf_count, feature_subset=self.feature_subset,
            kind=kind, rotation=rotation,
        )


def _check_fit_inputs(x, y, feature_subset):
    x = np.ascontiguousarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"x must be 2-D, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptyData("no samples to fit on")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"x rows {x.shape[0]} != y length {y.shape[0]}")
    if feature_subset is None:
        feature_subset = np.arange(x.shape[1])
    feature_subset = np.asarray(feature_subset, dtype=int)
    if feature_subset.shape[0] != x.shape[1]:
        raise ValueError("feature_subset length must match x columns")
    return x, y, feature_subset


def fit_hhcart(x, y, params: TreeFitParams, rng: Rng,
               feature_subset: np.ndarray | None = None) -> ObliqueTree:
    """Fit an HHCART tree on ``x`` (already restricted to its feature subset)
    against targets ``y``."""
    x, y, feature_subset = _check_fit_inputs(x, y, feature_subset)
    b = _TreeBuilder(x, y, params, feature_subset)

    def find_split(rows):
        xn = x[rows]
        yn = y[rows]
        oblique = None
        xh = None
        refl = None
        try:
            d = extract_direction(params.transform, xn, rng)
            refl = householder(d, 0)
            xh = xn @ refl
            oblique = _search_columns(xh, yn)
        except DegenerateData:
            pass
        axis = _search_columns(xn, yn)
        # axis-parallel wins ties: the oblique split must be strictly better
        if oblique is not None and (axis is None or oblique[0] > axis[0]):
            score, j, thr = oblique
            w = refl[:, j]
            go_right = xh[:, j] >= thr
        elif axis is not None:
            score, j, thr = axis
            w = np.zeros(x.shape[1])
            w[j] = 1.0
            go_right = xn[:, j] >= thr
        else:
            return None
        return w, thr, go_right

    b.grow(np.arange(x.shape[0]), 0, find_split)
    return b.finish("hhcart", None)


def fit_randcart(x, y, params: TreeFitParams, rng: Rng,
                 feature_subset: np.ndarray | None = None) -> ObliqueTree:
    """Fit a RandCART tree: one random rotation, axis-parallel splits in the
    rotated space."""
    x, y, feature_subset = _check_fit_inputs(x, y, feature_subset)
    q = qr_orthogonal(gaussian_matrix(x.shape[1], x.shape[1], rng))
    xq = x @ q
    b = _TreeBuilder(x, y, params, feature_subset)

    def find_split(rows):
        found = _search_columns(xq[rows], y[rows])
        if found is None:
            return None
        score, j, thr = found
        return q[:, j], thr, xq[rows, j] >= thr

    b.grow(np.arange(x.shape[0]), 0, find_split)
    return b.finish("randcart", q)


def node_score(node: ObliqueNode, x: np.ndarray) -> float:
    """Split-function value <w, x> for a full-dimension sample."""
    return float(x[node.w_idx] @ node.w_val)


def apply(tree: ObliqueTree, x) -> SignedPath:
    """Route a full-dimension sample to its leaf; ties at a boundary go
    right."""
    x = np.asarray(x, dtype=float)
    steps: list[tuple[int, int]] = []
    node = tree.nodes[tree.root]
    while not node.is_leaf:
        sign = 1 if node_score(node, x) >= node.threshold else -1
        steps.append((node.node_id, sign))
        node = tree.nodes[node.right if sign == 1 else node.left]
    return SignedPath(steps=steps, terminal_leaf=node.leaf_id)


def path_of_leaf(tree: ObliqueTree, leaf_id: int) -> SignedPath:
    """Signed root-to-leaf path for a stored leaf id; identical to the path
    ``apply`` produces for any sample landing in that leaf."""
    if not 0 <= leaf_id < tree.leaf_count:
        raise UnknownLeaf(f"leaf {leaf_id} out of range (leaf_count={tree.leaf_count})")
    stack: list[tuple[int, list[tuple[int, int]]]] = [(tree.root, [])]
    while stack:
        nid, steps = stack.pop()
        node = tree.nodes[nid]
        if node.is_leaf:
            if node.leaf_id == leaf_id:
                return SignedPath(steps=steps, terminal_leaf=leaf_id)
            continue
        stack.append((node.left, steps + [(nid, -1)]))
        stack.append((node.right, steps + [(nid, +1)]))
    raise UnknownLeaf(f"leaf {leaf_id} not reachable from root")

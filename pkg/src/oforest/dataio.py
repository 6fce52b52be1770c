"""Dataset ingestion, preprocessing, and model/code persistence.

Wire formats:

* CSV: comma-delimited, ``.`` decimal point, optional header row.
* Images: binary PGM (P5) / PPM (P6), maxval 255.  Pixels are flattened
  row-major per channel, channels concatenated, so an (h, w, c) image is a
  feature row of length h*w*c.  Written files use the canonical header
  ``P5\\n<w> <h>\\n255\\n`` (comments are normalized away on read).
* Models: canonical single-line JSON, versioned; floats serialize as their
  shortest exact decimal form, so save -> load -> save is byte-identical.
* Codes: CSV of integers, one row per sample, one column per estimator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (CorruptHeader, NotAnImage, ParseError, RaggedRows,
                     SchemaError, SizesExceedData, UnsupportedFormat,
                     VersionMismatch)
from .forest import ForestConfig, ForestModel
from .numkit import Rng
from .otree import ObliqueNode, ObliqueTree

FORMAT_VERSION = 1


@dataclass
class Dataset:
    x: np.ndarray
    image_shape: tuple[int, int, int] | None = None
    feature_names: list[str] | None = None

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    def subset(self, rows) -> "Dataset":
        return Dataset(x=self.x[rows], image_shape=self.image_shape,
                       feature_names=self.feature_names)


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_data(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.std + self.mean


@dataclass
class SplitSpec:
    test_size: float | None = None
    n_train: int | None = None
    n_test: int | None = None
    seed: int = 0


# --- CSV ----------------------------------------------------------------


def read_csv(path, has_header: bool = False) -> Dataset:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    names = None
    start = 0
    if has_header:
        if not rows:
            raise ParseError(f"{path}: empty file, expected a header")
        names = rows[0]
        start = 1
    body = rows[start:]
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(body[0])
    out = np.empty((len(body), width))
    for i, row in enumerate(body):
        line_no = start + i + 1
        if len(row) != width:
            raise RaggedRows(f"{path}: line {line_no} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: line {line_no}, column {j + 1}: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: line {line_no}, column {j + 1}: non-finite value {cell!r}")
            out[i, j] = v
    return Dataset(x=out, feature_names=names)


def save_csv(x: np.ndarray, path, header: list[str] | None = None):
    """Write floats in their shortest exact decimal form (deterministic)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    with open(path, "w", newline="") as f:
        if header is not None:
            f.write(",".join(header) + "\n")
        for row in x:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


# --- PGM / PPM ----------------------------------------------------------


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch in (b" ", b"\t", b"\r", b"\n"):
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\r", b"\n"):
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
        pos += 1
    if start == pos:
        raise CorruptHeader("unexpected end of header")
    return data[start:pos], pos


def read_image(path) -> Dataset:
    data = Path(path).read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise UnsupportedFormat(f"{path}: not a binary P5/P6 file")
    channels = 1 if data[:2] == b"P5" else 3
    pos = 2
    fields = []
    for _ in range(3):
        try:
            tok, pos = _next_token(data, pos)
            fields.append(int(tok))
        except (ValueError, CorruptHeader):
            raise CorruptHeader(f"{path}: malformed header") from None
    w, h, maxval = fields
    if w < 1 or h < 1:
        raise CorruptHeader(f"{path}: bad dimensions {w}x{h}")
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: maxval {maxval}, only 255 supported")
    raster = pos + 1  # exactly one whitespace byte after maxval
    nbytes = w * h * channels
    if len(data) - raster < nbytes:
        raise CorruptHeader(f"{path}: raster truncated ({len(data) - raster} of {nbytes} bytes)")
    pix = np.frombuffer(data[raster:raster + nbytes], dtype=np.uint8)
    if channels == 1:
        features = pix.astype(float)
    else:
        planes = pix.reshape(h, w, 3)
        features = np.concatenate([planes[:, :, c].ravel() for c in range(3)]).astype(float)
    return Dataset(x=features[None, :], image_shape=(h, w, channels))


def write_image(path, image: np.ndarray):
    """Write an integral [0, 255]-valued (h, w) or (h, w, 1|3) array as
    canonical P5/P6."""
    image = np.asarray(image)
    arr = image.astype(float)
    if not np.all((arr >= 0) & (arr <= 255) & (arr == np.floor(arr))):
        raise ValueError("image values must be integers in [0, 255]")
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim == 2:
        h, w = image.shape
        header = b"P5\n%d %d\n255\n" % (w, h)
        raster = image.astype(np.uint8).tobytes()
    elif image.ndim == 3 and image.shape[2] == 3:
        h, w = image.shape[:2]
        header = b"P6\n%d %d\n255\n" % (w, h)
        raster = image.astype(np.uint8).tobytes()  # (h, w, 3) is interleaved
    else:
        raise ValueError(f"expected (h, w) or (h, w, 1|3) image, got shape {image.shape}")
    Path(path).write_bytes(header + raster)


def image_from_row(row: np.ndarray, image_shape) -> np.ndarray:
    """Per-channel flattened features back to an (h, w[, c]) pixel array."""
    h, w, c = image_shape
    planes = np.asarray(row, dtype=float).reshape(c, h, w)
    return planes[0] if c == 1 else np.stack([planes[i] for i in range(c)], axis=2)


def row_from_image(image: np.ndarray) -> np.ndarray:
    """(h, w[, c]) pixel array to per-channel flattened features."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        return image.ravel()
    return np.concatenate([image[:, :, c].ravel() for c in range(image.shape[2])])


def resize_bilinear(d: Dataset, new_h: int, new_w: int) -> Dataset:
    """Corner-aligned bilinear resize of every sample, clamped to [0, 255]."""
    if d.image_shape is None:
        raise NotAnImage("dataset has no image shape")
    h, w, c = d.image_shape

    def coords(n_out, n_in):
        if n_out == 1 or n_in == 1:
            return np.zeros(n_out)
        return np.arange(n_out) * (n_in - 1) / (n_out - 1)

    sy = coords(new_h, h)
    sx = coords(new_w, w)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0)[:, None]
    wx = (sx - x0)[None, :]

    out = np.empty((d.n, new_h * new_w * c))
    for i in range(d.n):
        planes = d.x[i].reshape(c, h, w)
        resized = []
        for ch in range(c):
            img = planes[ch]
            top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
            bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
            resized.append(np.clip(top * (1 - wy) + bot * wy, 0.0, 255.0).ravel())
        out[i] = np.concatenate(resized)
    return Dataset(x=out, image_shape=(new_h, new_w, c), feature_names=None)


# --- splitting ----------------------------------------------------------


def train_test_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded shuffle then partition; test rows come first in the shuffle."""
    n = d.n
    if spec.n_train is not None or spec.n_test is not None:
        n_train = spec.n_train
        n_test = spec.n_test
        if n_test is None:
            n_test = n - n_train
        if n_train is None:
            n_train = n - n_test
    elif spec.test_size is not None:
        n_test = max(1, math.ceil(spec.test_size * n - 1e-9))
        n_train = n - n_test
    else:
        raise ValueError("split spec needs test_size or explicit counts")
    if n_train < 0 or n_test < 0 or n_train + n_test > n:
        raise SizesExceedData(f"requested {n_train}+{n_test} samples from {n}")
    perm = Rng(spec.seed).permutation(n)
    test = perm[:n_test]
    train = perm[n_test:n_test + n_train]
    return d.subset(train), d.subset(test)


# --- model persistence ----------------------------------------------------


def _node_dict(node: ObliqueNode) -> dict:
    if node.is_leaf:
        weights = None
        threshold = None
    else:
        weights = [[int(i), float(v)] for i, v in zip(node.w_idx, node.w_val)]
        threshold = float(node.threshold)
    return {
        "id": int(node.node_id),
        "weights": weights,
        "threshold": threshold,
        "left": None if node.left is None else int(node.left),
        "right": None if node.right is None else int(node.right),
        "leaf_id": None if node.leaf_id is None else int(node.leaf_id),
    }


def _tree_dict(tree: ObliqueTree) -> dict:
    return {
        "kind": tree.kind,
        "feature_subset": [int(i) for i in tree.feature_subset],
        "rotation": None if tree.rotation is None
                    else [[float(v) for v in row] for row in tree.rotation],
        "nodes": [_node_dict(nd) for nd in tree.nodes],
    }


def model_to_dict(model: ForestModel) -> dict:
    cfg = model.config
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "tree_kind": cfg.tree_kind,
            "transform": cfg.transform,
            "n_estimators": int(cfg.n_estimators),
            "max_depth": int(cfg.max_depth),
            "max_samples": float(cfg.max_samples),
            "max_features": float(cfg.max_features),
            "seed": int(cfg.seed),
        },
        "p": int(model.p),
        "standardizer": None if model.standardizer is None else {
            "mean": [float(v) for v in model.standardizer.mean],
            "std": [float(v) for v in model.standardizer.std],
        },
        "channel_tag": model.channel_tag,
        "image_shape": None if model.image_shape is None
                       else [int(v) for v in model.image_shape],
        "trees": [_tree_dict(t) for t in model.trees],
    }


def save_model(model: ForestModel, path):
    text = json.dumps(model_to_dict(model), separators=(",", ":"), allow_nan=False)
    Path(path).write_text(text + "\n")


def _require(cond: bool, msg: str):
    if not cond:
        raise SchemaError(msg)


def _tree_from_dict(doc: dict, p: int) -> ObliqueTree:
    _require(isinstance(doc, dict) and {"kind", "feature_subset", "rotation", "nodes"} <= set(doc),
             "tree entry missing required keys")
    kind = doc["kind"]
    _require(kind in ("hhcart", "randcart"), f"unknown tree kind {kind!r}")
    subset = np.asarray(doc["feature_subset"], dtype=int)
    _require(subset.ndim == 1 and subset.size >= 1, "feature_subset must be non-empty")
    _require(np.all(np.diff(subset) > 0), "feature_subset must be strictly increasing")
    _require(subset[0] >= 0 and subset[-1] < p, "feature_subset out of range")
    rotation = doc["rotation"]
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=float)
        _require(rotation.shape == (subset.size, subset.size), "rotation shape mismatch")

    raw_nodes = doc["nodes"]
    _require(isinstance(raw_nodes, list) and raw_nodes, "tree has no nodes")
    nodes: list[ObliqueNode] = []
    leaf_ids = []
    for i, nd in enumerate(raw_nodes):
        _require(isinstance(nd, dict) and nd.get("id") == i, f"node {i}: ids must be dense and ordered")
        leaf_id = nd.get("leaf_id")
        if leaf_id is not None:
            _require(nd.get("weights") is None and nd.get("threshold") is None
                     and nd.get("left") is None and nd.get("right") is None,
                     f"node {i}: leaf with internal fields")
            leaf_ids.append(int(leaf_id))
            nodes.append(ObliqueNode(node_id=i, leaf_id=int(leaf_id)))
        else:
            weights = nd.get("weights")
            _require(isinstance(weights, list) and weights, f"node {i}: internal node without weights")
            w_idx = np.asarray([wv[0] for wv in weights], dtype=int)
            w_val = np.asarray([wv[1] for wv in weights], dtype=float)
            _require(np.all((w_idx >= 0) & (w_idx < p)), f"node {i}: weight index out of range")
            _require(np.all(np.isfinite(w_val)) and np.linalg.norm(w_val) > 0,
                     f"node {i}: weights must be finite and nonzero")
            thr = nd.get("threshold")
            _require(thr is not None and math.isfinite(float(thr)), f"node {i}: bad threshold")
            left, right = nd.get("left"), nd.get("right")
            _require(isinstance(left, int) and isinstance(right, int)
                     and 0 <= left < len(raw_nodes) and 0 <= right < len(raw_nodes),
                     f"node {i}: bad child links")
            nodes.append(ObliqueNode(node_id=i, w_idx=w_idx, w_val=w_val,
                                     threshold=float(thr), left=left, right=right))
    _require(sorted(leaf_ids) == list(range(len(leaf_ids))), "leaf ids must be dense 0..k-1")

    # walk from the root to validate reachability and recover the depth
    depth = 0
    seen = set()
    stack = [(0, 0)]
    while stack:
        nid, dep = stack.pop()
        _require(nid not in seen, "node reachable twice (not a tree)")
        seen.add(nid)
        node = nodes[nid]
        if node.is_leaf:
            depth = max(depth, dep)
        else:
            stack.append((node.left, dep + 1))
            stack.append((node.right, dep + 1))
    _require(len(seen) == len(nodes), "unreachable nodes present")
    return ObliqueTree(nodes=nodes, root=0, depth=depth, leaf_count=len(leaf_ids),
                       feature_subset=subset, kind=kind, rotation=rotation)


def load_model(path) -> ForestModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from None
    _require(isinstance(doc, dict), "model document must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format_version {version!r}, expected {FORMAT_VERSION}")
    _require({"config", "p", "standardizer", "channel_tag", "trees"} <= set(doc),
             "model document missing required keys")
    try:
        config = ForestConfig(**doc["config"])
        config.validate()
    except Exception as e:
        raise SchemaError(f"bad config: {e}") from None
    p = doc["p"]
    _require(isinstance(p, int) and p >= 1, "p must be a positive integer")
    std = doc["standardizer"]
    standardizer = None
    if std is not None:
        _require(isinstance(std, dict) and {"mean", "std"} <= set(std), "bad standardizer")
        mean = np.asarray(std["mean"], dtype=float)
        sd = np.asarray(std["std"], dtype=float)
        _require(mean.shape == (p,) and sd.shape == (p,), "standardizer length mismatch")
        _require(bool(np.all(sd > 0)), "standardizer std must be positive")
        standardizer = Standardizer(mean=mean, std=sd)
    channel_tag = doc["channel_tag"]
    _require(channel_tag in (None, "R", "G", "B", "gray"), f"bad channel_tag {channel_tag!r}")
    image_shape = doc.get("image_shape")
    if image_shape is not None:
        _require(isinstance(image_shape, list) and len(image_shape) == 2, "bad image_shape")
        image_shape = (int(image_shape[0]), int(image_shape[1]))
    trees = [_tree_from_dict(td, p) for td in doc["trees"]]
    _require(len(trees) == config.n_estimators,
             f"{len(trees)} trees but n_estimators={config.n_estimators}")
    return ForestModel(config=config, trees=trees, p=p, standardizer=standardizer,
                       channel_tag=channel_tag, image_shape=image_shape)


# --- code persistence -----------------------------------------------------


def save_codes(codes: np.ndarray, path):
    codes = np.atleast_2d(np.asarray(codes, dtype=int))
    with open(path, "w", newline="") as f:
        for row in codes:
            f.write(",".join(str(int(v)) for v in row) + "\n")


def load_codes(path) -> np.ndarray:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ParseError(f"{path}: no code rows")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=int)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(f"{path}: line {i + 1} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = int(cell)
            except ValueError:
                raise ParseError(f"{path}: line {i + 1}, column {j + 1}: {cell!r}") from None
    return out

"""Leaf-code encoder, signed constraint assembly, and LP decode.

A sample's latent code is one terminal-leaf id per tree.  Decoding
regenerates the root-to-leaf inequalities ``sign . <w, x> >= sign . b`` from
the stored trees, stacks them tree-by-tree into ``A x >= b`` and returns the
minimum-L1-norm point (optionally inside a pixel box).  Left-branch strict
inequalities are relaxed to non-strict; solutions therefore sit on
constraint boundaries, so re-encoding a decoded sample is not guaranteed to
reproduce the code.

Tabular decode runs in standardized space when the model carries a
standardizer: the L1 objective then weighs features on comparable scales;
the returned sample is inverse-transformed back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, DimensionMismatch
from .forest import ForestModel
from .lpsolve import solve_l1
from .otree import apply, path_of_leaf


@dataclass
class LeafCode:
    leaves: np.ndarray        # one leaf id per tree

    def __len__(self) -> int:
        return int(self.leaves.shape[0])


@dataclass
class ConstraintSystem:
    a: np.ndarray             # (sum of path lengths) x p
    b: np.ndarray
    provenance: list[tuple[int, int, int]]   # (tree index, node_id, sign)


@dataclass
class BoxSpec:
    lo: object = None         # scalar, per-variable array, or None
    hi: object = None

    @property
    def pair(self):
        return (self.lo, self.hi)


PIXEL_BOX = BoxSpec(lo=0.0, hi=255.0)


def encode(model: ForestModel, x) -> LeafCode:
    """Send a sample through every tree and keep the terminal leaves.

    The sample must already be standardized when the model carries a
    standardizer.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.p,):
        raise DimensionMismatch(f"sample has shape {x.shape}, model expects ({model.p},)")
    leaves = np.fromiter((apply(tree, x).terminal_leaf for tree in model.trees),
                         dtype=int, count=len(model.trees))
    return LeafCode(leaves=leaves)


def assemble(model: ForestModel, code: LeafCode) -> ConstraintSystem:
    """Stack the sign-applied path inequalities of every tree, in tree order
    and path order."""
    p = model.p
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    prov: list[tuple[int, int, int]] = []
    for i, tree in enumerate(model.trees):
        path = path_of_leaf(tree, int(code.leaves[i]))
        for nid, sign in path.steps:
            node = tree.nodes[nid]
            row = np.zeros(p)
            row[node.w_idx] = sign * node.w_val
            rows.append(row)
            rhs.append(sign * node.threshold)
            prov.append((i, nid, sign))
    a = np.vstack(rows) if rows else np.zeros((0, p))
    return ConstraintSystem(a=a, b=np.asarray(rhs, dtype=float), provenance=prov)


def decode(model: ForestModel, code: LeafCode, box: BoxSpec | None = None) -> np.ndarray:
    """Reconstruct a sample from its leaf code by L1 minimization over the
    assembled system; inverse-standardized when the model has a
    standardizer."""
    system = assemble(model, code)
    x = solve_l1(system.a, system.b, box=None if box is None else box.pair)
    if model.standardizer is not None:
        x = model.standardizer.inverse(x)
    return x


def _as_channels(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ChannelMismatch(f"expected (h, w) or (h, w, 1|3) image, got shape {image.shape}")
    return image


def encode_image(models: list[ForestModel], image) -> list[LeafCode]:
    """Per-channel leaf codes for a pixel image with values in [0, 255]."""
    image = _as_channels(image)
    if len(models) != image.shape[2]:
        raise ChannelMismatch(f"{image.shape[2]}-channel image but {len(models)} models")
    return [encode(models[c], image[:, :, c].ravel()) for c in range(image.shape[2])]


def decode_image(models: list[ForestModel], codes: list[LeafCode],
                 shape: tuple[int, int]) -> np.ndarray:
    """Decode per-channel codes back to an integral [0, 255] image of the
    given (height, width)."""
    if len(models) != len(codes):
        raise ChannelMismatch(f"{len(codes)} codes but {len(models)} models")
    h, w = shape
    planes = []
    for model, code in zip(models, codes):
        if model.p != h * w:
            raise DimensionMismatch(f"model expects {model.p} pixels, shape gives {h * w}")
        vals = decode(model, code, box=PIXEL_BOX)
        planes.append(np.clip(np.floor(vals + 0.5), 0, 255).reshape(h, w))
    out = planes[0] if len(planes) == 1 else np.stack(planes, axis=2)
    return out.astype(np.uint8)

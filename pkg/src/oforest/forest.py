"""Unsupervised bagging ensemble of oblique trees.

Targets are synthetic: one vector of U[0, 1) draws per fit, shared by all
estimators and bootstrapped per estimator, so the ensemble partitions the
space without labels.  Every estimator derives its own random substream from
(seed, estimator index); fitting with 1 or k workers yields the identical
model.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch, EmptyData
from .numkit import Rng
from .otree import (ObliqueTree, SignedPath, TreeFitParams, apply,
                    fit_hhcart, fit_randcart)
from .transforms import TRANSFORM_KINDS

TREE_KINDS = ("hhcart", "randcart")


@dataclass
class ForestConfig:
    tree_kind: str = "hhcart"
    transform: str = "eig"
    n_estimators: int = 100
    max_depth: int = 3
    max_samples: float = 1.0
    max_features: float = 1.0
    seed: int = 0

    def validate(self):
        if self.tree_kind not in TREE_KINDS:
            raise ConfigInvalid(f"tree_kind must be one of {TREE_KINDS}, got {self.tree_kind!r}")
        if self.transform not in TRANSFORM_KINDS:
            raise ConfigInvalid(f"transform must be one of {TRANSFORM_KINDS}, got {self.transform!r}")
        if self.n_estimators < 1:
            raise ConfigInvalid(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth < 1:
            raise ConfigInvalid(f"max_depth must be >= 1, got {self.max_depth}")
        for name in ("max_samples", "max_features"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigInvalid(f"{name} must be in (0, 1], got {v}")


@dataclass
class ForestModel:
    config: ForestConfig
    trees: list[ObliqueTree]
    p: int
    standardizer: object | None = None       # dataio.Standardizer
    channel_tag: str | None = None           # "R" | "G" | "B" | "gray"
    image_shape: tuple[int, int] | None = None

    @property
    def n_estimators(self) -> int:
        return len(self.trees)


def frac_count(frac: float, n: int) -> int:
    """ceil(frac * n) with a fuzz guard against binary rounding
    (0.1 * 300 must give 30, not 31)."""
    return max(1, math.ceil(frac * n - 1e-9))


def bootstrap_indices(config: ForestConfig, n: int, p: int, t: int):
    """Row/feature draws for estimator ``t``: ceil(max_samples*n) rows with
    replacement, ceil(max_features*p) features without.  Returns the
    substream so tree fitting continues on it."""
    rng = Rng(config.seed).substream(t)
    rows = rng.integers(0, n, size=frac_count(config.max_samples, n))
    feats = np.sort(rng.permutation(p)[: frac_count(config.max_features, p)])
    return rows, feats, rng


def _fit_one(x: np.ndarray, y: np.ndarray, config: ForestConfig, t: int) -> ObliqueTree:
    rows, feats, rng = bootstrap_indices(config, x.shape[0], x.shape[1], t)
    params = TreeFitParams(max_depth=config.max_depth, transform=config.transform)
    fitter = fit_hhcart if config.tree_kind == "hhcart" else fit_randcart
    return fitter(x[np.ix_(rows, feats)], y[rows], params, rng, feature_subset=feats)


def _fit_range(args) -> list[ObliqueTree]:
    x, y, config, ts = args
    return [_fit_one(x, y, config, t) for t in ts]


def fit(x: np.ndarray, config: ForestConfig, workers: int = 1,
        standardizer=None, channel_tag: str | None = None,
        image_shape: tuple[int, int] | None = None) -> ForestModel:
    """Fit the ensemble on row-samples ``x`` (already standardized when a
    standardizer is attached)."""
    config.validate()
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise EmptyData(f"need at least 2 samples and 1 feature, got shape {x.shape}")
    y = Rng(config.seed).substream("targets").uniform(x.shape[0])
    indices = list(range(config.n_estimators))
    if workers <= 1 or config.n_estimators == 1:
        trees = [_fit_one(x, y, config, t) for t in indices]
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(_fit_range, [(x, y, config, c) for c in chunks]))
        by_index: dict[int, ObliqueTree] = {}
        for chunk, part in zip(chunks, parts):
            by_index.update(zip(chunk, part))
        trees = [by_index[t] for t in indices]
    return ForestModel(config=config, trees=trees, p=x.shape[1],
                       standardizer=standardizer, channel_tag=channel_tag,
                       image_shape=image_shape)


def apply_all(model: ForestModel, x) -> list[SignedPath]:
    """One signed path per tree, in tree order."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.p,):
        raise DimensionMismatch(f"sample has shape {x.shape}, model expects ({model.p},)")
    return [apply(tree, x) for tree in model.trees]

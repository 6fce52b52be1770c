"""One-component direction extractors.

Each extractor maps a block of node samples to a single unit direction in
feature space; tree induction reflects that direction onto a coordinate
axis.  Directions are fit per node, from the samples reaching that node.
Supported kinds (config spelling is exact):

* ``eig``      dominant eigenvector of the sample covariance
* ``svd``      dominant eigenvector of X^T X (uncentered)
* ``fast_ica`` one-unit fixed-point ICA direction
* ``proj``     normalized Gaussian vector, independent of the data
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateData
from .numkit import Rng, canonical_sign, covariance, power_iteration

TRANSFORM_KINDS = ("eig", "svd", "fast_ica", "proj")

_ICA_MAX_ITER = 200
_ICA_TOL = 1e-4


def _fast_ica_direction(x: np.ndarray, rng: Rng) -> np.ndarray:
    """One-unit FastICA with g = tanh, mapped back through the whitening."""
    xc = x - x.mean(axis=0)
    cov = covariance(x)
    lam, vecs = np.linalg.eigh(cov)
    keep = lam > 1e-12
    if not np.any(keep):
        raise DegenerateData("covariance has no component above 1e-12")
    k = vecs[:, keep] / np.sqrt(lam[keep])  # p x q whitening map
    z = (xc @ k).T                          # q x n, cov(z) = I
    q = z.shape[0]
    w = rng.normal(size=q)
    w /= np.linalg.norm(w)
    for _ in range(_ICA_MAX_ITER):
        proj = w @ z
        g = np.tanh(proj)
        g_prime = 1.0 - g * g
        w_new = (z * g).mean(axis=1) - g_prime.mean() * w
        norm = np.linalg.norm(w_new)
        if norm < 1e-300:
            break
        w_new /= norm
        done = abs(float(w_new @ w)) > 1.0 - _ICA_TOL
        w = w_new
        if done:
            break
    d = k @ w
    return d / np.linalg.norm(d)


def extract_direction(kind: str, x: np.ndarray, rng: Rng) -> np.ndarray:
    """Unit direction for a node's sample block; largest-magnitude entry
    positive.

    Raises DegenerateData when the underlying matrix is numerically zero so
    the caller can fall back to axis-parallel splitting.
    """
    if kind not in TRANSFORM_KINDS:
        raise ValueError(f"unknown transform kind {kind!r}")
    x = np.asarray(x, dtype=float)
    p = x.shape[1]
    if kind == "proj":
        v = rng.normal(size=p)
        n = np.linalg.norm(v)
        if n < 1e-300:
            raise DegenerateData("zero projection draw")
        return canonical_sign(v / n)
    if kind == "eig":
        m = covariance(x)
    elif kind == "svd":
        m = x.T @ x
    else:
        return canonical_sign(_fast_ica_direction(x, rng))
    if np.max(np.abs(m)) <= 1e-12:
        raise DegenerateData(f"{kind}: matrix is numerically zero")
    v, _ = power_iteration(m, rng)
    return v

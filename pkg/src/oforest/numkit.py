"""Dense linear-algebra kernels and deterministic random sampling.

All functions take and return plain ``numpy`` arrays (row-major, float64).
Randomness flows exclusively through :class:`Rng`, which wraps the Philox
4x64 counter-based bit generator: a stream is identified by ``(seed, label
path)`` alone, so substreams are reproducible regardless of how many draws
happened elsewhere.  Normal/uniform variates use numpy's ``Generator``
methods on that bit generator (ziggurat normals), which numpy keeps stable
for a fixed bit generator.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import NonUnitDirection, RankDeficient, TooFewSamples


def _label_key(path: str) -> int:
    digest = hashlib.blake2b(path.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class Rng:
    """Deterministic random stream keyed by (seed, label path).

    ``substream(label)`` derives an independent stream from the seed and the
    label alone; interleaving draws between substreams never perturbs either
    sequence.  Labels are stringified, and nested substreams join their
    labels with ``/``.
    """

    def __init__(self, seed: int, _path: str = ""):
        self.seed = int(seed)
        self._path = _path
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, _label_key(_path)],
                       dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, label) -> "Rng":
        return Rng(self.seed, f"{self._path}/{label}")

    def normal(self, size=None) -> np.ndarray:
        return self._gen.normal(size=size)

    def uniform(self, size=None) -> np.ndarray:
        """U[0, 1) draws."""
        return self._gen.random(size=size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        """Integers in [low, high), drawn with replacement."""
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry is positive (first on ties)."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def householder(d: np.ndarray, e_index: int) -> np.ndarray:
    """Reflection H = I - 2uu^T with u = (e - d)/||e - d|| mapping d onto the
    ``e_index``-th basis vector.

    Degenerate d ~ e returns the identity (the reflection's limit), so the
    oblique split degrades to axis-parallel.
    """
    d = np.asarray(d, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise NonUnitDirection(f"||d|| = {np.linalg.norm(d)!r}, expected 1")
    if not 0 <= e_index < d.shape[0]:
        raise ValueError(f"e_index {e_index} out of range for dim {d.shape[0]}")
    e = np.zeros_like(d)
    e[e_index] = 1.0
    u = e - d
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        return np.eye(d.shape[0])
    u /= nu
    return np.eye(d.shape[0]) - 2.0 * np.outer(u, u)


def qr_orthogonal(m: np.ndarray) -> np.ndarray:
    """Orthogonal factor Q of a square full-rank matrix, with the sign
    convention diag(R) >= 0 so the factorization is unique."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    if np.any(np.abs(diag) < 1e-12):
        raise RankDeficient(f"pivot norm below 1e-12: min |R_ii| = {np.min(np.abs(diag))!r}")
    signs = np.where(diag < 0, -1.0, 1.0)
    return q * signs


def covariance(x: np.ndarray) -> np.ndarray:
    """Sample covariance of row-samples, centered, divisor n-1."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise TooFewSamples(f"covariance needs >= 2 rows, got {x.shape[0]}")
    xc = x - x.mean(axis=0)
    return (xc.T @ xc) / (x.shape[0] - 1)


def power_iteration(m: np.ndarray, rng: Rng, max_iter: int = 500,
                    tol: float = 1e-9) -> tuple[np.ndarray, bool]:
    """Dominant eigenvector of a symmetric matrix by power iteration.

    Returns ``(v, converged)``; v is unit-norm with its largest-magnitude
    entry positive.  A (near-)zero matrix yields the first basis vector.
    Convergence means the Rayleigh residual ||Mv - lambda v|| fell below
    1e-6 * max(1, |lambda|); non-convergence returns the last iterate.
    """
    m = np.asarray(m, dtype=float)
    p = m.shape[0]
    e1 = np.zeros(p)
    e1[0] = 1.0
    if np.max(np.abs(m)) < 1e-12:
        return e1, True
    v = rng.normal(size=p)
    nv = np.linalg.norm(v)
    v = e1.copy() if nv < 1e-12 else v / nv
    lam = 0.0
    res = np.inf
    w = m @ v
    for _ in range(max_iter):
        nw = np.linalg.norm(w)
        if nw < 1e-300:
            # started orthogonal to the range; re-seed
            v = rng.normal(size=p)
            v /= np.linalg.norm(v)
            w = m @ v
            continue
        v = w / nw
        w = m @ v
        lam = float(v @ w)
        res = float(np.linalg.norm(w - lam * v))
        if res <= tol * max(1.0, abs(lam)):
            break
    converged = res <= 1e-6 * max(1.0, abs(lam))
    return canonical_sign(v), converged


def gaussian_matrix(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard normals, deterministic per seed."""
    if rows < 1 or cols < 1:
        raise ValueError(f"need rows, cols >= 1, got {rows}x{cols}")
    return rng.normal(size=(rows, cols))

"""Independent reference implementations the tests check against.

Everything here is deliberately brute-force and shares no code path with
the package: vertex enumeration for LPs, nested-loop SSIM, per-pixel
bilinear interpolation, and a plain recursive axis-parallel CART.
"""

import itertools
import math

import numpy as np


def lp_vertex_oracle(c, g, h, lo, hi, tol=1e-8):
    """Brute-force LP oracle for fully box-bounded problems.

    Stacks rows and bounds into R z >= r, enumerates every n-subset of
    active constraints, solves the square systems, filters feasible points
    and minimizes.  Complete because the box makes any nonempty feasible set
    a polytope (so it has a vertex).  Returns ("optimal", value) or
    ("infeasible", None).
    """
    n = c.shape[0]
    eye = np.eye(n)
    rows = np.vstack([g, eye, -eye])
    rhs = np.concatenate([h, lo, -hi])
    m = rows.shape[0]
    combos = np.array(list(itertools.combinations(range(m), n)))
    mats = rows[combos]                     # (k, n, n)
    rvec = rhs[combos]                      # (k, n)
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-10
    if not np.any(ok):
        return "infeasible", None
    verts = np.linalg.solve(mats[ok], rvec[ok][:, :, None])[:, :, 0]
    feas = np.all(verts @ rows.T >= rhs - tol, axis=1)
    if not np.any(feas):
        return "infeasible", None
    return "optimal", float(np.min(verts[feas] @ c))


def ssim_direct(a, b, data_range):
    """Nested-loop SSIM with Gaussian 11x11 / sigma 1.5 windows (full-image
    window when the image is smaller), K1=0.01, K2=0.03."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h, w = a.shape
    kh, kw = (11, 11) if h >= 11 and w >= 11 else (h, w)
    ys = np.arange(kh) - (kh - 1) / 2.0
    xs = np.arange(kw) - (kw - 1) / 2.0
    kern = np.empty((kh, kw))
    for i in range(kh):
        for j in range(kw):
            kern[i, j] = math.exp(-(ys[i] ** 2 + xs[j] ** 2) / (2 * 1.5 ** 2))
    kern /= kern.sum()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    vals = []
    for i in range(h - kh + 1):
        for j in range(w - kw + 1):
            wa = a[i:i + kh, j:j + kw]
            wb = b[i:i + kh, j:j + kw]
            mu_a = float((kern * wa).sum())
            mu_b = float((kern * wb).sum())
            va = float((kern * wa * wa).sum()) - mu_a ** 2
            vb = float((kern * wb * wb).sum()) - mu_b ** 2
            vab = float((kern * wa * wb).sum()) - mu_a * mu_b
            vals.append(((2 * mu_a * mu_b + c1) * (2 * vab + c2))
                        / ((mu_a ** 2 + mu_b ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def bilinear_direct(img, new_h, new_w):
    """Per-pixel corner-aligned bilinear resize of one channel."""
    h, w = img.shape
    out = np.empty((new_h, new_w))
    for i in range(new_h):
        sy = 0.0 if new_h == 1 or h == 1 else i * (h - 1) / (new_h - 1)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for j in range(new_w):
            sx = 0.0 if new_w == 1 or w == 1 else j * (w - 1) / (new_w - 1)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
            bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bot * fy
    return np.clip(out, 0.0, 255.0)


def ref_axis_cart(x, y, max_depth):
    """Plain recursive axis-parallel CART with variance reduction; same
    stopping rules and tie conventions as the package (smallest threshold,
    then smallest column).  Returns a nested structure:
    ("leaf", leaf_id) | ("node", col, thr, left, right)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    counter = {"leaf": 0}

    def sse(v):
        if v.size == 0:
            return 0.0
        d = v - v.mean()
        return float(d @ d)

    def best_split(rows):
        best = None  # (score, col, thr)
        for j in range(x.shape[1]):
            vals = np.unique(x[rows, j])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = 0.5 * (a + b)
                if thr <= a:
                    continue
                mask = x[rows, j] >= thr
                score = sse(y[rows]) - sse(y[rows][mask]) - sse(y[rows][~mask])
                if score > 1e-12 and (best is None or score > best[0]):
                    best = (score, j, thr)
        return best

    def grow(rows, depth):
        if depth >= max_depth or rows.size < 2 or sse(y[rows]) < 1e-12:
            leaf = ("leaf", counter["leaf"])
            counter["leaf"] += 1
            return leaf
        found = best_split(rows)
        if found is None:
            leaf = ("leaf", counter["leaf"])
            counter["leaf"] += 1
            return leaf
        _, j, thr = found
        mask = x[rows, j] >= thr
        left = grow(rows[~mask], depth + 1)
        right = grow(rows[mask], depth + 1)
        return ("node", j, thr, left, right)

    return grow(np.arange(x.shape[0]), 0)

"""Hot numeric kernels: exact Euclidean distance transform and the banded
total-variation descent loop.

Each kernel exists twice: a numba-jitted version and a pure-numpy twin with
identical semantics.  Selection happens once at import time through the
``FUSIONEDIT_NUMBA`` environment variable:

    FUSIONEDIT_NUMBA=1   require numba (ImportError if missing)
    FUSIONEDIT_NUMBA=0   force the numpy fallback
    unset / "auto"       use numba when importable, numpy otherwise

``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os

import numpy as np

_INF = 1e15  # larger than any squared pixel distance, safely squarable in f64


def _numba_requested() -> bool | None:
    flag = os.environ.get("FUSIONEDIT_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    if flag in ("1", "true", "on", "yes"):
        return True
    return None  # auto


_want = _numba_requested()
if _want is False:
    HAS_NUMBA = False
else:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        if _want is True:
            raise
        HAS_NUMBA = False


# ---------------------------------------------------------------------------
# Exact Euclidean distance transform (squared), Felzenszwalb-Huttenlocher.
# Column pass finds the nearest site within each column; the row pass takes
# the lower envelope of the parabolas f(j') = g(j')^2 + (j - j')^2.
# ---------------------------------------------------------------------------

def _edt_sq_numpy(sites: np.ndarray) -> np.ndarray:
    h, w = sites.shape
    g = np.where(sites, 0.0, _INF)
    for i in range(1, h):
        np.minimum(g[i], g[i - 1] + 1.0, out=g[i])
    for i in range(h - 2, -1, -1):
        np.minimum(g[i], g[i + 1] + 1.0, out=g[i])
    # Row pass as a direct minimum over source columns; exact, and at mask
    # resolutions the (w, w) temporary stays small.
    js = np.arange(w, dtype=np.float64)
    offs2 = (js[:, None] - js[None, :]) ** 2
    out = np.empty((h, w))
    g2 = g * g
    for i in range(h):
        out[i] = (g2[i][None, :] + offs2).min(axis=1)
    return out


def _edt_sq_scalar(sites):
    h, w = sites.shape
    inf2 = _INF * _INF
    g = np.empty((h, w))
    for j in range(w):
        d = _INF
        for i in range(h):
            d = 0.0 if sites[i, j] else min(d + 1.0, _INF)
            g[i, j] = d
        d = _INF
        for i in range(h - 1, -1, -1):
            d = 0.0 if sites[i, j] else min(d + 1.0, _INF)
            if d < g[i, j]:
                g[i, j] = d

    out = np.empty((h, w))
    v = np.empty(w, np.int64)      # parabola sites of the lower envelope
    z = np.empty(w + 1)            # envelope breakpoints
    f = np.empty(w)
    for i in range(h):
        for j in range(w):
            f[j] = g[i, j] * g[i, j]
        # Build the envelope from finite parabolas only; columns without any
        # site contribute f = inf2 and are skipped.  The caller guarantees at
        # least one site somewhere, so at least one parabola is finite.
        k = -1
        for q in range(w):
            if f[q] >= inf2:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -_INF
                z[1] = _INF
                continue
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            while s <= z[k]:
                k -= 1
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = _INF
        if k < 0:
            for q in range(w):
                out[i, q] = inf2
            continue
        k = 0
        for q in range(w):
            while z[k + 1] < q:
                k += 1
            dj = q - v[k]
            out[i, q] = dj * dj + f[v[k]]
    return out


# ---------------------------------------------------------------------------
# Banded TV descent.  Minimizes, over band pixels only,
#   sum_band ( (X[r]-X[p])^2 + (X[d]-X[p])^2 ) + lam * sum_band (X[p]-Xhat[p])^2
# with forward differences and replicate (Neumann) edges; pixels outside the
# band are frozen and act as Dirichlet data.
# ---------------------------------------------------------------------------

def _tv_loss_numpy(x, x_hat, band, lam):
    with np.errstate(over="ignore", invalid="ignore"):  # inf loss is detected upstream
        r = np.zeros_like(x)
        d = np.zeros_like(x)
        r[:, :, :-1] = x[:, :, 1:] - x[:, :, :-1]
        d[:, :-1, :] = x[:, 1:, :] - x[:, :-1, :]
        grad = ((r * r + d * d) * band).sum()
        fid = (((x - x_hat) ** 2) * band).sum()
        return grad + lam * fid


def _tv_descend_numpy(x, x_hat, band, lam, step, max_iters, tol, losses):
    b = band.astype(bool)
    prev = _tv_loss_numpy(x, x_hat, band, lam)
    losses[0] = prev
    n = 0
    for it in range(1, max_iters + 1):
        saved = x[:, b].copy()
        r = np.zeros_like(x)
        d = np.zeros_like(x)
        r[:, :, :-1] = x[:, :, 1:] - x[:, :, :-1]
        d[:, :-1, :] = x[:, 1:, :] - x[:, :-1, :]
        g = -2.0 * (r + d) * band
        g[:, :, 1:] += 2.0 * (r * band)[:, :, :-1]
        g[:, 1:, :] += 2.0 * (d * band)[:, :-1, :]
        g += 2.0 * lam * (x - x_hat) * band
        x[:, b] -= step * g[:, b]
        cur = _tv_loss_numpy(x, x_hat, band, lam)
        if not np.isfinite(cur):
            return -it  # negative count signals a non-finite loss at |it|
        if cur > prev:
            x[:, b] = saved  # reject the step; recorded losses stay monotone
            break
        n = it
        losses[n] = cur
        if prev - cur < tol:
            break
        prev = cur
    return n


def _tv_loss_scalar(x, x_hat, band, lam):
    c, h, w = x.shape
    grad = 0.0
    fid = 0.0
    for ch in range(c):
        for i in range(h):
            for j in range(w):
                if band[i, j] == 0.0:
                    continue
                v = x[ch, i, j]
                if j + 1 < w:
                    dr = x[ch, i, j + 1] - v
                    grad += dr * dr
                if i + 1 < h:
                    dd = x[ch, i + 1, j] - v
                    grad += dd * dd
                dv = v - x_hat[ch, i, j]
                fid += dv * dv
    return grad + lam * fid


def _tv_descend_scalar(x, x_hat, band, lam, step, max_iters, tol, losses):
    # tv_loss_kernel resolves to the jitted loss when numba is active.
    c, h, w = x.shape
    g = np.empty((c, h, w))
    saved = np.empty((c, h, w))
    prev = tv_loss_kernel(x, x_hat, band, lam)
    losses[0] = prev
    n = 0
    for it in range(1, max_iters + 1):
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    if band[i, j] == 0.0:
                        continue
                    acc = 2.0 * lam * (x[ch, i, j] - x_hat[ch, i, j])
                    if j + 1 < w:
                        acc -= 2.0 * (x[ch, i, j + 1] - x[ch, i, j])
                    if i + 1 < h:
                        acc -= 2.0 * (x[ch, i + 1, j] - x[ch, i, j])
                    if j > 0 and band[i, j - 1] != 0.0:
                        acc += 2.0 * (x[ch, i, j] - x[ch, i, j - 1])
                    if i > 0 and band[i - 1, j] != 0.0:
                        acc += 2.0 * (x[ch, i, j] - x[ch, i - 1, j])
                    g[ch, i, j] = acc
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    if band[i, j] != 0.0:
                        saved[ch, i, j] = x[ch, i, j]
                        x[ch, i, j] -= step * g[ch, i, j]
        cur = tv_loss_kernel(x, x_hat, band, lam)
        if not np.isfinite(cur):
            return -it
        if cur > prev:
            # reject the step; recorded losses stay monotone
            for ch in range(c):
                for i in range(h):
                    for j in range(w):
                        if band[i, j] != 0.0:
                            x[ch, i, j] = saved[ch, i, j]
            break
        n = it
        losses[n] = cur
        if prev - cur < tol:
            break
        prev = cur
    return n


if HAS_NUMBA:
    edt_squared = njit(cache=True)(_edt_sq_scalar)
    tv_loss_kernel = njit(cache=True)(_tv_loss_scalar)
    tv_descend = njit(cache=True)(_tv_descend_scalar)
else:
    edt_squared = _edt_sq_numpy
    tv_loss_kernel = _tv_loss_numpy
    tv_descend = _tv_descend_numpy

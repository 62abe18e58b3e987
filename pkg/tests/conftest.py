"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own algorithms: brute
force all-pairs distances, fixpoint flood fill, a dense linear solve for
the banded TV objective, and closed-form ODE solutions.
"""

import numpy as np
import pytest

from fusionedit.providers import VelocityProvider, SRC, TAR, NULL


class LinearFlowProvider(VelocityProvider):
    """v(x, t, c) = a * x for every conditioning; closed-form ODE oracle."""

    supports_values = True

    def __init__(self, a, shape):
        self.a = float(a)
        self._shape = tuple(shape)

    @property
    def conditionings(self):
        return frozenset((SRC, TAR, NULL))

    def evaluate(self, x, t, c):
        return self.a * np.asarray(x, dtype=np.float64)


class ConstantProvider(VelocityProvider):
    """Constant per-conditioning fields, independent of x and t."""

    supports_values = True

    def __init__(self, fields: dict):
        self._fields = {c: np.asarray(v, dtype=np.float64) for c, v in fields.items()}

    @property
    def conditionings(self):
        return frozenset(self._fields)

    def evaluate(self, x, t, c):
        return self._fields[c].copy()


def brute_distance(mask: np.ndarray) -> np.ndarray:
    """All-pairs Euclidean distance to the nearest opposite pixel, minus one."""
    h, w = mask.shape
    ys, xs = np.indices((h, w))
    pts = np.stack([ys.ravel(), xs.ravel()], axis=1).astype(np.float64)
    vals = (np.asarray(mask) != 0).ravel()
    out = np.empty(h * w)
    for i in range(h * w):
        opp = pts[vals != vals[i]]
        out[i] = np.sqrt(((pts[i] - opp) ** 2).sum(axis=1)).min()
    return np.maximum(out - 1.0, 0.0).reshape(h, w)


def flood_fill_region(means: np.ndarray, merge_ratio: float) -> np.ndarray:
    """Fixpoint flood fill with the region-grow acceptance predicate."""
    rows, cols = means.shape
    seed_flat = int(np.argmax(means))
    seed = (seed_flat // cols, seed_flat % cols)
    if means[seed] <= 0:
        return np.zeros((rows, cols), dtype=bool)
    threshold = merge_ratio * means[seed]
    accepted = np.zeros((rows, cols), dtype=bool)
    accepted[seed] = True
    changed = True
    while changed:
        changed = False
        for r in range(rows):
            for c in range(cols):
                if accepted[r, c] or means[r, c] < threshold:
                    continue
                for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= nr < rows and 0 <= nc < cols and accepted[nr, nc]:
                        accepted[r, c] = True
                        changed = True
                        break
    return accepted


def tv_direct_solve(x0: np.ndarray, band: np.ndarray, lam: float) -> np.ndarray:
    """Exact minimizer of the banded TV objective via the normal equations.

    Forward differences based at band pixels, replicate edges; pixels
    outside the band are Dirichlet data; the fidelity target is x0 itself.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 2:
        x0 = x0[None]
    c, h, w = x0.shape
    band = np.asarray(band, dtype=bool)
    idx = -np.ones((h, w), dtype=int)
    coords = np.argwhere(band)
    for u, (i, j) in enumerate(coords):
        idx[i, j] = u
    n = len(coords)
    out = x0.copy()
    for ch in range(c):
        a = np.zeros((n, n))
        rhs = np.zeros(n)
        plane = x0[ch]
        for u, (i, j) in enumerate(coords):
            a[u, u] += 2.0 * lam
            rhs[u] += 2.0 * lam * plane[i, j]
            for ni, nj in ((i, j + 1), (i + 1, j)):
                if ni >= h or nj >= w:
                    continue  # replicate edge: zero difference
                a[u, u] += 2.0
                q = idx[ni, nj]
                if q >= 0:
                    a[u, q] -= 2.0
                    a[q, q] += 2.0
                    a[q, u] -= 2.0
                else:
                    rhs[u] += 2.0 * plane[ni, nj]
        sol = np.linalg.solve(a, rhs)
        for u, (i, j) in enumerate(coords):
            out[ch, i, j] = sol[u]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

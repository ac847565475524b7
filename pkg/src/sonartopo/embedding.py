"""Delay embedding, tangent map and PCA projection of signal maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .core import CIRCLE, SPHERE_GRID, DomainError, PointCloud, SignalMap, grid_axes, grid_points, magnitude_channel

IDENTITY = "identity"
EMBED_REDUCERS = (IDENTITY, "magnitude", "max", "l2")


@dataclass(frozen=True)
class DelayConfig:
    """Angular offsets (degrees) and the per-sample channel reduction.

    ``range_gate`` optionally restricts the channels (half-open index range)
    before reduction, for lab arrays whose range samples include empty water.
    """

    offsets: tuple
    reducer: str = IDENTITY
    range_gate: Optional[tuple] = None

    def __post_init__(self):
        offs = tuple(float(o) for o in np.atleast_1d(self.offsets))
        if not offs:
            raise DomainError("at least one delay offset is required")
        for o in offs:
            if not 0.0 <= o < 360.0:
                raise DomainError(f"offset {o} deg outside [0, 360)")
        if self.reducer not in EMBED_REDUCERS:
            raise DomainError(f"unknown reducer {self.reducer!r}; expected one of {EMBED_REDUCERS}")
        if self.range_gate is not None:
            lo, hi = (int(v) for v in self.range_gate)
            if not 0 <= lo < hi:
                raise DomainError(f"range gate must satisfy 0 <= start < stop, got {self.range_gate}")
            object.__setattr__(self, "range_gate", (lo, hi))
        object.__setattr__(self, "offsets", offs)


def _shift_samples(offset: float, n: int) -> int:
    s = offset * n / 360.0
    r = round(s)
    if abs(s - r) > 1e-9:
        raise DomainError(f"offset {offset} deg is not a whole number of samples on a {n}-point circle")
    return int(r) % n


def _reduced_columns(smap: SignalMap, config: DelayConfig) -> np.ndarray:
    s = smap.samples
    if config.range_gate is not None:
        lo, hi = config.range_gate
        if hi > smap.channels:
            raise DomainError(f"range gate stop {hi} exceeds {smap.channels} channels")
        s = s[:, lo:hi]
        smap = smap.with_samples(s)
    if config.reducer == IDENTITY:
        if smap.is_complex:
            out = np.empty((s.shape[0], 2 * s.shape[1]))
            out[:, 0::2] = s.real
            out[:, 1::2] = s.imag
            return out
        return np.asarray(s, dtype=np.float64)
    return magnitude_channel(smap, config.reducer).samples


def delay_embed(smap: SignalMap, config: DelayConfig) -> PointCloud:
    """Stack angle-lagged copies of the signal into one point per look angle."""
    if smap.domain.kind != CIRCLE:
        raise DomainError("delay embedding needs a map over a circle")
    n = smap.domain.size
    shifts = [_shift_samples(o, n) for o in config.offsets]
    cols = _reduced_columns(smap, config)
    idx = np.arange(n)
    pts = np.hstack([cols[(idx + s) % n] for s in shifts])
    return PointCloud(pts, labels=grid_points(smap.domain))


def tangent_map(smap: SignalMap) -> PointCloud:
    """Pair each value with its elevation and azimuth derivatives, per radian.

    Azimuth differences wrap around; elevation uses central differences in
    the interior and second-order one-sided differences on the edge rows.
    """
    if smap.domain.kind != SPHERE_GRID:
        raise DomainError("tangent map needs a map over a sphere grid")
    if smap.is_complex:
        raise DomainError("tangent map needs real data; reduce complex samples first")
    if smap.channels != 1:
        raise DomainError(f"tangent map needs a single channel, got {smap.channels}")
    u = smap.grid()[:, :, 0]
    na, ne = smap.domain.shape
    if ne < 3:
        raise DomainError("elevation derivative needs at least 3 rows")
    d_az = np.deg2rad(360.0 / na)
    d_el = np.deg2rad(180.0 / ne)

    du_az = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * d_az)
    du_el = np.empty_like(u)
    du_el[1:-1] = (u[2:] - u[:-2]) / (2.0 * d_el)
    du_el[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * d_el)
    du_el[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * d_el)

    pts = np.column_stack([u.ravel(), du_el.ravel(), du_az.ravel()])
    return PointCloud(pts, labels=grid_points(smap.domain))


@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    scale = np.sqrt(np.sum(a * a))
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 1e10 * abs(apq) == abs(h):
                    # theta**2 would overflow; t ~ 1 / (2 theta)
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    ap = a[k, p]
                    aq = a[k, q]
                    a[k, p] = c * ap - s * aq
                    a[k, q] = s * ap + c * aq
                for k in range(n):
                    ap = a[p, k]
                    aq = a[q, k]
                    a[p, k] = c * ap - s * aq
                    a[q, k] = s * ap + c * aq
                for k in range(n):
                    vp = v[k, p]
                    vq = v[k, q]
                    v[k, p] = c * vp - s * vq
                    v[k, q] = s * vp + c * vq
    return -1


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm falls below ``tol`` times
    the matrix norm. Returns (eigenvalues, eigenvectors as columns), unsorted.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("jacobi_eigh needs a square matrix")
    v = np.eye(a.shape[0])
    if not a.any():
        return np.zeros(a.shape[0]), v
    if _jacobi_sweeps(a, v, tol, max_sweeps) < 0:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def pca_project(cloud: PointCloud, out_dim: int) -> PointCloud:
    """Project a mean-centred cloud onto its leading principal axes.

    When there are fewer points than dimensions the eigenproblem is solved
    on the (points x points) Gram matrix instead; the principal axes are
    then recovered as normalized X^T u.
    """
    if len(cloud) == 0:
        raise DomainError("cannot project an empty cloud")
    if not 1 <= out_dim <= cloud.ambient_dim:
        raise DomainError(f"out_dim must be in [1, {cloud.ambient_dim}], got {out_dim}")
    x = cloud.points - cloud.points.mean(axis=0)
    n, d = x.shape
    if d <= n:
        w, v = jacobi_eigh(x.T @ x)
        order = np.argsort(-w, kind="stable")
        v = v[:, order[:out_dim]]
    else:
        w, u = jacobi_eigh(x @ x.T)
        order = np.argsort(-w, kind="stable")
        v = np.zeros((d, out_dim))
        for j, idx in enumerate(order[:out_dim]):
            col = x.T @ u[:, idx]
            norm = np.linalg.norm(col)
            if norm > 0:
                v[:, j] = col / norm
    for j in range(out_dim):
        if v[np.argmax(np.abs(v[:, j])), j] < 0:
            v[:, j] = -v[:, j]
    return PointCloud(x @ v, labels=cloud.labels)


__all__ = ["DelayConfig", "delay_embed", "tangent_map", "jacobi_eigh", "pca_project", "grid_axes"]

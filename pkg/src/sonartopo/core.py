"""Shared domain types: sampling domains, signal maps and point clouds.

Angles are stored in degrees everywhere. Radians only appear inside the
trigonometric kernels of the modules that need them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """Raised when an input violates an operation's preconditions."""


CIRCLE = "circle"
SPHERE_GRID = "sphere_grid"
INTERVAL = "interval"

REDUCERS = ("magnitude", "max", "l2")


@dataclass(frozen=True)
class DomainDescriptor:
    """A sampled domain: a circle of look angles, an azimuth/elevation grid or an interval.

    Use the :meth:`circle`, :meth:`sphere_grid` and :meth:`interval`
    constructors rather than building one by hand.
    """

    kind: str
    shape: tuple

    def __post_init__(self):
        if self.kind not in (CIRCLE, SPHERE_GRID, INTERVAL):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        expected = 2 if self.kind == SPHERE_GRID else 1
        if len(self.shape) != expected:
            raise DomainError(f"{self.kind} takes {expected} count(s), got {self.shape}")
        for c in self.shape:
            if int(c) != c or c < 2:
                raise DomainError(f"domain counts must be integers >= 2, got {self.shape}")
        object.__setattr__(self, "shape", tuple(int(c) for c in self.shape))

    @classmethod
    def circle(cls, n_samples: int) -> "DomainDescriptor":
        return cls(CIRCLE, (n_samples,))

    @classmethod
    def sphere_grid(cls, n_azimuth: int, n_elevation: int) -> "DomainDescriptor":
        return cls(SPHERE_GRID, (n_azimuth, n_elevation))

    @classmethod
    def interval(cls, n_samples: int) -> "DomainDescriptor":
        return cls(INTERVAL, (n_samples,))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dim(self) -> int:
        return 2 if self.kind == SPHERE_GRID else 1

    @property
    def periodic(self) -> bool:
        """True when the first axis wraps (circle and sphere-grid azimuth)."""
        return self.kind in (CIRCLE, SPHERE_GRID)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape)}

    @classmethod
    def from_dict(cls, d: dict) -> "DomainDescriptor":
        return cls(d["kind"], tuple(d["shape"]))


def grid_axes(domain: DomainDescriptor) -> tuple:
    """Per-axis sample coordinates.

    Circle: degrees on [0, 360). SphereGrid: (azimuth on [0, 360), elevation
    at cell centres of (-90, 90), poles excluded). Interval: [0, 1] inclusive.
    """
    if domain.kind == CIRCLE:
        n = domain.shape[0]
        return (np.arange(n) * (360.0 / n),)
    if domain.kind == SPHERE_GRID:
        na, ne = domain.shape
        az = np.arange(na) * (360.0 / na)
        el = -90.0 + (np.arange(ne) + 0.5) * (180.0 / ne)
        return az, el
    return (np.linspace(0.0, 1.0, domain.shape[0]),)


def grid_points(domain: DomainDescriptor) -> np.ndarray:
    """Coordinates of every grid point, in storage order.

    1-D domains give a flat array. Sphere grids give an ``(n_el * n_az, 2)``
    array of (azimuth, elevation) rows; storage is elevation-major, so the
    flat index of (i_az, i_el) is ``i_el * n_az + i_az``.
    """
    axes = grid_axes(domain)
    if domain.kind != SPHERE_GRID:
        return axes[0]
    az, el = axes
    A, E = np.meshgrid(az, el)
    return np.column_stack([A.ravel(), E.ravel()])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SignalMap:
    """Sampled echo data: one row per domain grid point, one column per channel.

    ``samples`` is float64 for real data and complex128 otherwise.
    """

    domain: DomainDescriptor
    samples: np.ndarray
    range_bin_m: Optional[float] = None

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2:
            raise DomainError(f"samples must be 2-D (points, channels), got shape {s.shape}")
        if s.shape[0] != self.domain.size:
            raise DomainError(
                f"samples have {s.shape[0]} rows but the domain has {self.domain.size} grid points"
            )
        if s.shape[1] < 1:
            raise DomainError("a signal map needs at least one channel")
        if np.iscomplexobj(s):
            s = s.astype(np.complex128)
        else:
            s = s.astype(np.float64)
        if not np.all(np.isfinite(s)):
            bad = np.argwhere(~np.isfinite(s))[0]
            raise DomainError(f"non-finite sample at (point {bad[0]}, channel {bad[1]})")
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    def with_samples(self, samples) -> "SignalMap":
        return SignalMap(self.domain, samples, self.range_bin_m)

    def grid(self) -> np.ndarray:
        """Samples of a sphere-grid map reshaped to (n_el, n_az, channels)."""
        if self.domain.kind != SPHERE_GRID:
            raise DomainError("grid() is only defined for sphere-grid maps")
        na, ne = self.domain.shape
        return self.samples.reshape(ne, na, self.channels)

    def __eq__(self, other):
        if not isinstance(other, SignalMap):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.range_bin_m == other.range_bin_m
            and self.samples.dtype == other.samples.dtype
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


@dataclass(frozen=True)
class PointCloud:
    """Finite point set in R^n, optionally labelled with domain parameters."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    ambient_dim: int = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2:
            raise DomainError(f"points must be 2-D, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(p))
        object.__setattr__(self, "ambient_dim", p.shape[1])
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.float64)
            if lab.shape[0] != p.shape[0]:
                raise DomainError(
                    f"{lab.shape[0]} labels for {p.shape[0]} points; cardinalities must match"
                )
            object.__setattr__(self, "labels", _frozen(lab))

    def __len__(self):
        return self.points.shape[0]


def magnitude_channel(smap: SignalMap, reducer: str = "magnitude") -> SignalMap:
    """Reduce a signal map to nonnegative real values.

    ``"magnitude"`` keeps every channel and takes ``|z|``; ``"max"`` keeps the
    largest channel magnitude; ``"l2"`` takes the Euclidean norm over channels.
    """
    mag = np.abs(smap.samples)
    if reducer == "magnitude":
        out = mag
    elif reducer == "max":
        out = mag.max(axis=1, keepdims=True)
    elif reducer == "l2":
        out = np.sqrt(np.sum(mag * mag, axis=1, keepdims=True))
    else:
        raise DomainError(f"unknown reducer {reducer!r}; expected one of {REDUCERS}")
    return smap.with_samples(out)

"""Point-scatterer echo simulation for circular and spherical collections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CIRCLE, SPHERE_GRID, DomainDescriptor, DomainError, SignalMap, grid_axes, grid_points

FREE_SPACE = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class Scatterer:
    position: tuple
    reflectivity: complex = 1.0

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3 or not all(math.isfinite(c) for c in pos):
            raise DomainError(f"scatterer position must be a finite 3-vector, got {self.position}")
        a = complex(self.reflectivity)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise DomainError("reflectivity must be finite")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "reflectivity", a)


@dataclass(frozen=True)
class Scene:
    """A superposition of point scatterers.

    ``green_normalization`` scales the free-space kernel; the default
    1/(4*pi) is the usual 3-D normalization.
    """

    scatterers: tuple
    green_normalization: float = FREE_SPACE

    def __post_init__(self):
        sc = tuple(self.scatterers)
        if not sc:
            raise DomainError("a scene needs at least one scatterer")
        object.__setattr__(self, "scatterers", sc)

    @classmethod
    def from_arrays(cls, positions, reflectivities, green_normalization: float = FREE_SPACE) -> "Scene":
        return cls(tuple(Scatterer(p, a) for p, a in zip(positions, reflectivities)), green_normalization)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.scatterers], dtype=np.float64)

    @property
    def reflectivities(self) -> np.ndarray:
        return np.array([s.reflectivity for s in self.scatterers], dtype=np.complex128)

    def union(self, other: "Scene") -> "Scene":
        if other.green_normalization != self.green_normalization:
            raise DomainError("cannot merge scenes with different Green's function normalizations")
        return Scene(self.scatterers + other.scatterers, self.green_normalization)

    def scaled(self, factor: complex) -> "Scene":
        """Same geometry with every reflectivity multiplied by ``factor``."""
        return Scene(
            tuple(Scatterer(s.position, s.reflectivity * factor) for s in self.scatterers),
            self.green_normalization,
        )


@dataclass(frozen=True)
class CollectionGeometry:
    trajectory: DomainDescriptor
    radius: float
    wavenumbers: tuple

    def __post_init__(self):
        ks = tuple(float(k) for k in np.atleast_1d(self.wavenumbers))
        if not ks:
            raise DomainError("at least one wavenumber is required")
        if any(k <= 0 for k in ks):
            raise DomainError("wavenumbers must be positive")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError("wavenumbers must be strictly increasing")
        if not self.radius > 0:
            raise DomainError(f"collection radius must be positive, got {self.radius}")
        object.__setattr__(self, "wavenumbers", ks)
        object.__setattr__(self, "radius", float(self.radius))


def green(k, r, c_g: float = 1.0):
    """Free-space Green's function ``c_g * exp(-i k r) / r``."""
    r = np.asarray(r, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if np.any(r <= 0):
        raise DomainError("sensor coincides with scatterer (distance <= 0)")
    if np.any(k <= 0):
        raise DomainError("wavenumber must be positive")
    kr = k * r
    out = c_g * (np.cos(kr) - 1j * np.sin(kr)) / r
    return out[()] if out.ndim == 0 else out


def _responses(scene: Scene, sensors: np.ndarray, wavenumbers: Sequence[float]) -> np.ndarray:
    """Received signal for many sensor positions: shape (n_sensors, n_wavenumbers)."""
    ks = np.asarray(wavenumbers, dtype=np.float64)
    if ks.size == 0:
        raise DomainError("at least one wavenumber is required")
    sensors = np.atleast_2d(np.asarray(sensors, dtype=np.float64))
    diff = sensors[:, None, :] - scene.positions[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    if np.any(r <= 0):
        i, j = np.argwhere(r <= 0)[0]
        raise DomainError(f"sensor {i} coincides with scatterer {j}")
    a = scene.reflectivities
    out = np.empty((sensors.shape[0], ks.size), dtype=np.complex128)
    for q, k in enumerate(ks):
        # summing over scatterers per wavenumber keeps memory at O(sensors * scatterers)
        out[:, q] = (green(k, r, scene.green_normalization) * a[None, :]).sum(axis=1)
    return out


def point_scatter_response(scene: Scene, sensor_position, wavenumbers) -> np.ndarray:
    """Complex response at one sensor position, one entry per wavenumber."""
    return _responses(scene, np.asarray(sensor_position, dtype=np.float64)[None, :], wavenumbers)[0]


def csas_collect(scene: Scene, geometry: CollectionGeometry) -> SignalMap:
    """Monostatic circular collection in the z=0 plane, one channel per wavenumber."""
    if geometry.trajectory.kind != CIRCLE:
        raise DomainError("csas_collect needs a Circle trajectory")
    th = np.deg2rad(grid_points(geometry.trajectory))
    R = geometry.radius
    sensors = np.column_stack([R * np.cos(th), R * np.sin(th), np.zeros_like(th)])
    return SignalMap(geometry.trajectory, _responses(scene, sensors, geometry.wavenumbers))


def sphere_collect(scene: Scene, geometry: CollectionGeometry) -> SignalMap:
    """Received signal strength |u| over an azimuth/elevation grid at fixed range."""
    if geometry.trajectory.kind != SPHERE_GRID:
        raise DomainError("sphere_collect needs a SphereGrid trajectory")
    if len(geometry.wavenumbers) != 1:
        raise DomainError("sphere_collect takes exactly one wavenumber")
    pts = np.deg2rad(grid_points(geometry.trajectory))
    th, ph = pts[:, 0], pts[:, 1]
    R = geometry.radius
    sensors = np.column_stack([R * np.cos(th) * np.cos(ph), R * np.sin(th) * np.cos(ph), R * np.sin(ph)])
    u = _responses(scene, sensors, geometry.wavenumbers)
    return SignalMap(geometry.trajectory, np.abs(u))


def pipe_scene(
    length: float,
    width: float,
    scatterers_per_side: int,
    reflectivity: complex = 1.0,
    center=(0.0, 0.0, 0.0),
    green_normalization: float = FREE_SPACE,
) -> Scene:
    """Equal scatterers spaced uniformly along the two long sides of a rectangle.

    The long sides run parallel to x at y = +/- width/2, so broadside views
    are at 90 and 270 degrees. ``center`` moves the rectangle off the
    rotation axis; the default keeps it centred on the origin, where the
    scene is symmetric under a half turn.
    """
    if not (length > width > 0):
        raise DomainError(f"pipe needs length > width > 0, got length={length}, width={width}")
    if int(scatterers_per_side) != scatterers_per_side or scatterers_per_side < 2:
        raise DomainError("scatterers_per_side must be an integer >= 2")
    n = int(scatterers_per_side)
    xs = np.linspace(-length / 2.0, length / 2.0, n)
    cx, cy, cz = (float(c) for c in center)
    pos = [(x + cx, s * width / 2.0 + cy, cz) for s in (1.0, -1.0) for x in xs]
    return Scene.from_arrays(pos, [reflectivity] * len(pos), green_normalization)


def normalize_peak(smap: SignalMap, peak: float, reducer: str = "l2") -> SignalMap:
    """Scale a map so the largest reduced value (its peak cross section) equals ``peak``."""
    from .core import magnitude_channel

    current = magnitude_channel(smap, reducer).samples.max()
    if current <= 0:
        raise DomainError("cannot normalize an all-zero map")
    return smap.with_samples(smap.samples * (peak / current))


def _philox_normals(seed: int, count: int) -> np.ndarray:
    """Standard normals from the Philox-4x64 counter-based generator via Box-Muller.

    Raw 64-bit words are turned into uniforms on (0, 1] using their top 53
    bits; each pair (u1, u2) yields two normals. The stream depends only on
    ``seed`` (through numpy's SeedSequence key derivation) and ``count``.
    """
    n_pairs = (count + 1) // 2
    raw = np.random.Philox(seed).random_raw(2 * n_pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)
    u1, u2 = u[0::2], u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    z = np.empty(2 * n_pairs)
    z[0::2] = rad * np.cos(ang)
    z[1::2] = rad * np.sin(ang)
    return z[:count]


def add_awgn(smap: SignalMap, sigma: float, seed: int) -> SignalMap:
    """Add white Gaussian noise of std ``sigma`` to the real and imaginary parts of every sample."""
    if not sigma >= 0:
        raise DomainError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return smap
    shape = smap.samples.shape
    z = _philox_normals(int(seed), 2 * shape[0] * shape[1]).reshape(shape[0], shape[1], 2)
    noise = sigma * (z[..., 0] + 1j * z[..., 1])
    return smap.with_samples(smap.samples + noise)


def snr_db(peak_cross_section: float, sigma: float, n_range_cells: int) -> float:
    """Peak-to-noise ratio in dB when noise of ``sigma`` per cell adds over ``n_range_cells`` cells."""
    if peak_cross_section <= 0 or sigma <= 0 or n_range_cells <= 0:
        raise DomainError("snr_db needs positive arguments")
    return 10.0 * math.log10(peak_cross_section / (sigma * math.sqrt(n_range_cells)))


def two_scatterer_scene() -> Scene:
    """Two scatterers at the origin and (2, 0, 0) m with reflectivities 1 and -0.5."""
    return Scene.from_arrays([(0, 0, 0), (2, 0, 0)], [1.0, -0.5])


def three_scatterer_scene() -> Scene:
    return two_scatterer_scene().union(Scene.from_arrays([(0, 1, 0)], [0.75]))


__all__ = [
    "FREE_SPACE",
    "Scatterer",
    "Scene",
    "CollectionGeometry",
    "green",
    "point_scatter_response",
    "csas_collect",
    "sphere_collect",
    "pipe_scene",
    "normalize_peak",
    "add_awgn",
    "snr_db",
    "two_scatterer_scene",
    "three_scatterer_scene",
    "grid_axes",
]

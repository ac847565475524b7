"""Synthetic test objects with known topology."""

from __future__ import annotations

import math

import numpy as np

from .core import DomainDescriptor, DomainError, PointCloud, SignalMap, grid_points


def fibonacci_sphere(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``n`` nearly uniform points on a sphere (golden-angle spiral)."""
    if n < 1:
        raise DomainError("need at least one point")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return radius * pts + np.asarray(center, dtype=np.float64)


def sphere_wedge(n_total: int = 400, radii=(1.0, 0.6)) -> PointCloud:
    """Two spheres touching at one point, sampled with density proportional to area.

    The first sphere is centred at the origin, the second on the +x axis so
    the two meet at (radii[0], 0, 0).
    """
    r1, r2 = radii
    n1 = int(round(n_total * r1**2 / (r1**2 + r2**2)))
    a = fibonacci_sphere(n1, r1)
    b = fibonacci_sphere(n_total - n1, r2, (r1 + r2, 0.0, 0.0))
    labels = np.concatenate([np.zeros(len(a)), np.ones(len(b))])
    return PointCloud(np.vstack([a, b]), labels)


def octahedron() -> np.ndarray:
    e = np.eye(3)
    return np.vstack([e, -e])


def cuboctahedron() -> np.ndarray:
    pts = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        for si in (1.0, -1.0):
            for sj in (1.0, -1.0):
                p = np.zeros(3)
                p[i], p[j] = si, sj
                pts.append(p)
    return np.array(pts) / math.sqrt(2.0)


def random_orthonormal_pairs(k: int, dim: int, seed: int) -> np.ndarray:
    """``k`` random orthonormal pairs in R^dim, shape (k, 2, dim)."""
    rng = np.random.default_rng(seed)
    out = np.empty((k, 2, dim))
    for j in range(k):
        q, _ = np.linalg.qr(rng.standard_normal((dim, 2)))
        out[j] = q.T
    return out


def wedge_of_loops_map(
    n: int,
    sigmas,
    dim: int = 6,
    seed: int = 0,
    support_fraction: float = 0.8,
) -> SignalMap:
    """A real map on a circle with one bump per entry of ``sigmas``.

    The circle is split into equal sectors. Inside the central
    ``support_fraction`` of sector j the map traces a closed planar loop

        sigma_j * sin(pi t) * (cos(pi t) a_j + sin(pi t) b_j),  t in [0, 1],

    a circle of diameter sigma_j through the origin, with a random
    orthonormal pair (a_j, b_j). Outside the supports the map is zero, so the
    image is a wedge of loops at the origin whose largest value is sigma_j.
    """
    sigmas = np.asarray(sigmas, dtype=np.float64)
    k = sigmas.size
    if k < 1:
        raise DomainError("need at least one loop")
    if not 0 < support_fraction <= 1:
        raise DomainError("support_fraction must be in (0, 1]")
    dom = DomainDescriptor.circle(n)
    theta = grid_points(dom)
    frames = random_orthonormal_pairs(k, dim, seed)
    out = np.zeros((n, dim))
    width = 360.0 / k
    for j in range(k):
        lo = j * width + 0.5 * (1.0 - support_fraction) * width
        t = (theta - lo) / (support_fraction * width)
        inside = (t > 0) & (t < 1)
        s = np.sin(np.pi * t[inside])
        c = np.cos(np.pi * t[inside])
        out[inside] = sigmas[j] * s[:, None] * (c[:, None] * frames[j, 0] + s[:, None] * frames[j, 1])
    return SignalMap(dom, out)


def geodesic_circle(n: int, circumference: float = 1.0) -> PointCloud:
    """Vertices of a regular n-gon with the given perimeter, labelled by angle."""
    ang = np.arange(n) * (2.0 * math.pi / n)
    radius = circumference / (2.0 * n * math.sin(math.pi / n))
    pts = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return PointCloud(pts, np.rad2deg(ang))


__all__ = [
    "fibonacci_sphere",
    "sphere_wedge",
    "octahedron",
    "cuboctahedron",
    "random_orthonormal_pairs",
    "wedge_of_loops_map",
    "geodesic_circle",
]

"""Prominent-echo detection and checks of the predicted topology."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import pdist, squareform

from .core import CIRCLE, SPHERE_GRID, DomainError, PointCloud, SignalMap, magnitude_channel
from .persistence import Feature, PersistenceDiagram, ranked_features

DEFAULT_THRESHOLD = 0.1
DEFAULT_TOLERANCE = 0.1


@dataclass(frozen=True)
class EchoSupport:
    """One prominent echo on an n-point circle grid.

    ``start`` and ``stop`` index a half-open run of samples; ``stop`` may
    exceed ``n`` when the run wraps through 0 degrees.
    """

    start: int
    stop: int
    n: int
    peak_angle: float
    sigma: float
    loop_length: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("echo cross section must be positive")
        if not 0 <= self.start < self.n or not self.start < self.stop <= self.start + self.n:
            raise DomainError(f"bad echo interval [{self.start}, {self.stop}) on {self.n} samples")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop) % self.n

    @property
    def start_deg(self) -> float:
        return self.start * 360.0 / self.n

    @property
    def end_deg(self) -> float:
        return (self.stop % self.n) * 360.0 / self.n

    @property
    def predicted_death_lb(self) -> float:
        return self.sigma / 2.0


def _codomain_points(smap: SignalMap) -> np.ndarray:
    s = smap.samples
    if smap.is_complex:
        out = np.empty((s.shape[0], 2 * s.shape[1]))
        out[:, 0::2] = s.real
        out[:, 1::2] = s.imag
        return out
    return np.asarray(s, dtype=np.float64)


def _runs(mask: np.ndarray):
    """Maximal runs of True as half-open (start, stop), merged across the wrap."""
    n = mask.size
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    # rotate so index 0 is below threshold; then no run crosses the array end
    off = int(np.argmin(mask))
    m = np.roll(mask, -off).astype(np.int8)
    d = np.diff(np.concatenate([[0], m, [0]]))
    starts = np.nonzero(d == 1)[0]
    stops = np.nonzero(d == -1)[0]
    runs = []
    for a, b in zip(starts, stops):
        s = (a + off) % n
        runs.append((int(s), int(s + (b - a))))
    return sorted(runs)


def detect_prominent_echos(
    smap: SignalMap, threshold_fraction: float = DEFAULT_THRESHOLD, reducer: str = "l2"
) -> List[EchoSupport]:
    """Segment a circle map into runs above ``threshold_fraction`` times its maximum.

    Multi-channel and complex maps are first reduced with ``reducer``. The
    loop length of each echo is measured on the unreduced samples, along the
    closed polyline 0 -> v(p) -> ... -> v(q) -> 0.
    """
    if smap.domain.kind != CIRCLE:
        raise DomainError("echo detection needs a map over a circle")
    if not 0.0 < threshold_fraction < 1.0:
        raise DomainError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    if smap.channels == 1 and not smap.is_complex:
        mag = np.abs(smap.samples[:, 0])
    else:
        mag = magnitude_channel(smap, reducer).samples[:, 0]
    top = mag.max()
    if top <= 0:
        return []
    n = mag.size
    pts = _codomain_points(smap)
    zero = np.zeros((1, pts.shape[1]))
    echos = []
    for start, stop in _runs(mag > threshold_fraction * top):
        idx = np.arange(start, stop) % n
        vals = mag[idx]
        # smallest angle among ties
        best = idx[vals == vals.max()].min()
        path = np.vstack([zero, pts[idx], zero])
        length = float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())
        echos.append(EchoSupport(start, stop, n, float(best * 360.0 / n), float(vals.max()), length))
    echos.sort(key=lambda e: e.peak_angle)
    return echos


def count_regions(smap: SignalMap, threshold_fraction: float, above: bool = True) -> int:
    """Connected regions of a sphere-grid map above (or at/below) a fraction of its maximum.

    Grid neighbours are 4-connected and azimuth wraps around.
    """
    if smap.domain.kind != SPHERE_GRID:
        raise DomainError("region counting needs a map over a sphere grid")
    if not 0.0 < threshold_fraction < 1.0:
        raise DomainError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    g = np.abs(smap.grid()[:, :, 0])
    t = threshold_fraction * g.max()
    mask = g > t if above else g <= t
    lab, n = ndimage.label(mask)
    parent = np.arange(n + 1)

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in zip(lab[:, 0], lab[:, -1]):
        if a and b:
            parent[find(a)] = find(b)
    return len({find(i) for i in range(1, n + 1)})


def expected_betti(num_echos: int, domain_dim: int) -> tuple:
    """Betti numbers of a wedge of ``num_echos`` spheres of dimension ``domain_dim``."""
    if domain_dim not in (1, 2):
        raise DomainError("domain dimension must be 1 or 2")
    if num_echos < 0:
        raise DomainError("number of echos must be nonnegative")
    b = [1, 0, 0]
    b[domain_dim] = num_echos
    return tuple(b)


@dataclass(frozen=True)
class DeathVerdict:
    sigma: float
    bound: float
    feature: Optional[Feature]
    passed: bool
    reason: str

    @property
    def matched_death(self) -> Optional[float]:
        return None if self.feature is None else self.feature.death


def check_death_bound(
    echos: Sequence[EchoSupport],
    diag: PersistenceDiagram,
    dim: int = 1,
    sampling_tolerance: float = DEFAULT_TOLERANCE,
    effective_sigma: Optional[float] = None,
) -> List[DeathVerdict]:
    """Match echos (largest cross section first) to features (longest-lived first).

    An echo passes when its matched feature dies no earlier than
    ``(sigma / 2) * (1 - sampling_tolerance)``. A truncated feature passes if
    the truncation scale already exceeds that value. ``effective_sigma``
    replaces every measured cross section, for signals whose background never
    reaches zero. Verdicts are returned in the order of ``echos``.
    """
    if sampling_tolerance < 0:
        raise DomainError("sampling_tolerance must be nonnegative")
    if effective_sigma is not None and not effective_sigma > 0:
        raise DomainError("effective_sigma must be positive")
    order = sorted(range(len(echos)), key=lambda i: (-echos[i].sigma, echos[i].peak_angle))
    feats = ranked_features(diag, dim)
    out: List[Optional[DeathVerdict]] = [None] * len(echos)
    for rank, i in enumerate(order):
        sigma = effective_sigma if effective_sigma is not None else echos[i].sigma
        bound = sigma / 2.0
        need = bound * (1.0 - sampling_tolerance)
        if rank >= len(feats):
            out[i] = DeathVerdict(sigma, bound, None, False, f"no H{dim} feature left to match")
            continue
        f = feats[rank]
        if f.finite:
            ok = f.death >= need
            why = f"death {f.death:.6g} {'>=' if ok else '<'} {need:.6g}"
        else:
            ok = f.truncated and diag.max_eps >= need
            why = f"alive past max_eps {diag.max_eps:.6g}" + ("" if ok else f" < {need:.6g}")
        out[i] = DeathVerdict(sigma, bound, f, bool(ok), why)
    return out


def injectivity_condition(p: int, ell: int, d: int) -> bool:
    """Generic injectivity of a p-scatterer, ell-wavenumber signal over a d-dimensional domain."""
    if min(p, ell, d) <= 0:
        raise DomainError("all arguments must be positive")
    return 2 * min(p, ell) > d


@dataclass(frozen=True)
class SelfIntersection:
    theta_i: float
    theta_j: float
    distance: float
    min_norm: float


def self_intersection_scan(cloud: PointCloud, codomain_tol: float, domain_sep: float) -> List[SelfIntersection]:
    """Pairs of samples that nearly coincide in the codomain but not on the circle.

    Each pair carries the smaller of the two point norms: near-zero crossings
    are the generic kind, large-norm ones point at a symmetric target.
    """
    if cloud.labels is None:
        raise DomainError("self-intersection scan needs angle labels")
    if cloud.labels.ndim != 1:
        raise DomainError("self-intersection scan needs scalar angle labels")
    if len(cloud) < 2:
        return []
    d = squareform(pdist(cloud.points))
    lab = cloud.labels
    sep = np.abs(lab[:, None] - lab[None, :]) % 360.0
    sep = np.minimum(sep, 360.0 - sep)
    norms = np.linalg.norm(cloud.points, axis=1)
    i, j = np.nonzero(np.triu((d < codomain_tol) & (sep > domain_sep), 1))
    return [
        SelfIntersection(float(lab[a]), float(lab[b]), float(d[a, b]), float(min(norms[a], norms[b])))
        for a, b in zip(i, j)
    ]


@dataclass
class EchoReport:
    echos: List[EchoSupport]
    threshold: float
    expected_betti: tuple
    verdicts: List[DeathVerdict] = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = []
        for k, e in enumerate(self.echos):
            v = self.verdicts[k] if k < len(self.verdicts) else None
            death = None if v is None else v.matched_death
            rows.append(
                {
                    "start_deg": e.start_deg,
                    "end_deg": e.end_deg,
                    "peak_deg": e.peak_angle,
                    "sigma": e.sigma,
                    "loop_length": e.loop_length,
                    "predicted_death_lb": e.predicted_death_lb if v is None else v.bound,
                    "matched_death": "inf" if death is not None and math.isinf(death) else death,
                    "verdict": None if v is None else ("PASS" if v.passed else "FAIL"),
                }
            )
        return {"echos": rows, "expected_betti": list(self.expected_betti), "threshold": self.threshold}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def analyze(
    smap: SignalMap,
    diag: Optional[PersistenceDiagram] = None,
    threshold_fraction: float = DEFAULT_THRESHOLD,
    sampling_tolerance: float = DEFAULT_TOLERANCE,
    effective_sigma: Optional[float] = None,
    reducer: str = "l2",
) -> EchoReport:
    echos = detect_prominent_echos(smap, threshold_fraction, reducer)
    top = float(magnitude_channel(smap, reducer).samples.max())
    verdicts = []
    if diag is not None:
        verdicts = check_death_bound(echos, diag, 1, sampling_tolerance, effective_sigma)
    return EchoReport(echos, threshold_fraction * top, expected_betti(len(echos), 1), verdicts)


__all__ = [
    "EchoSupport",
    "DeathVerdict",
    "SelfIntersection",
    "EchoReport",
    "detect_prominent_echos",
    "count_regions",
    "expected_betti",
    "check_death_bound",
    "injectivity_condition",
    "self_intersection_scan",
    "analyze",
]

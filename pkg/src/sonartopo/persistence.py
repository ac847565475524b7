"""Vietoris-Rips persistent homology in dimensions 0-2 over Z/2.

Simplices enter the filtration at the largest pairwise distance among their
vertices. Ties are broken by dimension and then by the lexicographic vertex
tuple, so results never depend on sort stability.

H0 comes from union-find over the sorted edges. H1 and H2 come from column
reduction of the boundary matrices. The highest boundary matrix is reduced
first so that its pivots can clear (skip) columns one dimension down.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np
from numba import njit
from scipy.spatial.distance import pdist, squareform

from .core import DomainError, PointCloud

EUCLIDEAN = "euclidean"
POLYLINE_GEODESIC = "polyline-geodesic"
METRICS = (EUCLIDEAN, POLYLINE_GEODESIC)

ORACLE_MAX_POINTS = 12


class OracleRefusal(DomainError):
    """The brute-force oracle was asked for more points than it enumerates."""


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    entries: np.ndarray
    metric_tag: str = EUCLIDEAN

    def __post_init__(self):
        d = np.array(self.entries, dtype=np.float64, copy=True)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DomainError(f"distance matrix must be square, got shape {d.shape}")
        if d.shape[0] == 0:
            raise DomainError("distance matrix must be nonempty")
        if not np.all(np.isfinite(d)):
            raise DomainError("distance entries must be finite")
        if np.any(d < 0):
            raise DomainError("distance entries must be nonnegative")
        if not np.array_equal(d, d.T):
            raise DomainError("distance matrix must be exactly symmetric")
        if np.any(np.diag(d) != 0):
            raise DomainError("distance matrix must have a zero diagonal")
        if self.metric_tag not in METRICS:
            raise DomainError(f"unknown metric {self.metric_tag!r}")
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.entries.max())

    def scaled(self, factor: float) -> "DistanceMatrix":
        return DistanceMatrix(self.entries * factor, self.metric_tag)


def distance_matrix(cloud: PointCloud, metric: str = EUCLIDEAN) -> DistanceMatrix:
    """Pairwise distances of a cloud.

    The polyline-geodesic metric orders points by their (circular) labels and
    measures the shorter way round the closed polyline through them.
    """
    n = len(cloud)
    if n == 0:
        raise DomainError("cloud is empty")
    if metric == EUCLIDEAN:
        if n == 1:
            return DistanceMatrix(np.zeros((1, 1)), EUCLIDEAN)
        return DistanceMatrix(squareform(pdist(cloud.points)), EUCLIDEAN)
    if metric != POLYLINE_GEODESIC:
        raise DomainError(f"unknown metric {metric!r}")
    if cloud.labels is None:
        raise DomainError("polyline-geodesic metric needs labelled points")
    if cloud.labels.ndim != 1:
        raise DomainError("polyline-geodesic metric needs scalar (circle angle) labels")
    order = np.argsort(cloud.labels, kind="stable")
    p = cloud.points[order]
    seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    total = seg.sum()
    s = np.concatenate([[0.0], np.cumsum(seg[:-1])])
    along = np.abs(s[:, None] - s[None, :])
    g = np.minimum(along, total - along)
    g = np.triu(g, 1)
    g = g + g.T
    d = np.empty_like(g)
    d[np.ix_(order, order)] = g
    return DistanceMatrix(d, POLYLINE_GEODESIC)


@dataclass(frozen=True)
class Feature:
    dim: int
    birth: float
    death: float
    truncated: bool = False

    @property
    def finite(self) -> bool:
        return math.isfinite(self.death)

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    """Features of a Rips filtration computed up to scale ``max_eps``.

    Classes still alive at ``max_eps`` have infinite death. They are flagged
    ``truncated`` when ``max_eps`` is below the diameter, since they would
    die later in the full filtration.
    """

    features: tuple
    max_eps: float = math.inf

    def __post_init__(self):
        feats = tuple(sorted(self.features, key=_feature_key))
        for f in feats:
            if f.dim not in (0, 1, 2):
                raise DomainError(f"feature dimension must be 0, 1 or 2, got {f.dim}")
            if not f.birth <= f.death:
                raise DomainError(f"feature with birth {f.birth} after death {f.death}")
        object.__setattr__(self, "features", feats)

    def in_dim(self, dim: int) -> List[Feature]:
        return [f for f in self.features if f.dim == dim]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dim", "birth", "death", "truncated"])
        for f in self.features:
            w.writerow([f.dim, repr(float(f.birth)), "inf" if not f.finite else repr(float(f.death)), int(f.truncated)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, max_eps: float = math.inf) -> "PersistenceDiagram":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["dim", "birth", "death", "truncated"]:
            raise DomainError("diagram CSV must start with header dim,birth,death,truncated")
        feats = []
        for i, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DomainError(f"diagram CSV line {i}: expected 4 fields, got {len(row)}")
            try:
                feats.append(Feature(int(row[0]), float(row[1]), float(row[2]), bool(int(row[3]))))
            except ValueError as exc:
                raise DomainError(f"diagram CSV line {i}: {exc}") from None
        return cls(tuple(feats), max_eps)


def _feature_key(f: Feature):
    return (f.dim, f.birth, f.death, f.truncated)


# --- numba kernels -----------------------------------------------------------


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union_find_h0(n, eu, ev):
    """Flag each edge (in filtration order) as merging two components or not."""
    parent = np.arange(n)
    rank = np.zeros(n, np.int64)
    merges = np.zeros(eu.shape[0], np.bool_)
    for e in range(eu.shape[0]):
        a = _find(parent, eu[e])
        b = _find(parent, ev[e])
        if a == b:
            continue
        merges[e] = True
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        if rank[a] == rank[b]:
            rank[a] += 1
    return merges


@njit(cache=True)
def _count_triangles(adj, eu, ev):
    n = adj.shape[0]
    cnt = 0
    for e in range(eu.shape[0]):
        a, b = eu[e], ev[e]
        for c in range(b + 1, n):
            if adj[a, c] and adj[b, c]:
                cnt += 1
    return cnt


@njit(cache=True)
def _fill_triangles(adj, eu, ev, out):
    n = adj.shape[0]
    k = 0
    for e in range(eu.shape[0]):
        a, b = eu[e], ev[e]
        for c in range(b + 1, n):
            if adj[a, c] and adj[b, c]:
                out[k, 0] = a
                out[k, 1] = b
                out[k, 2] = c
                k += 1


@njit(cache=True)
def _count_tetrahedra(adj, tri):
    n = adj.shape[0]
    cnt = 0
    for t in range(tri.shape[0]):
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        for d in range(c + 1, n):
            if adj[a, d] and adj[b, d] and adj[c, d]:
                cnt += 1
    return cnt


@njit(cache=True)
def _fill_tetrahedra(adj, tri, out):
    n = adj.shape[0]
    k = 0
    for t in range(tri.shape[0]):
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        for d in range(c + 1, n):
            if adj[a, d] and adj[b, d] and adj[c, d]:
                out[k, 0] = a
                out[k, 1] = b
                out[k, 2] = c
                out[k, 3] = d
                k += 1


@njit(cache=True)
def _key3(x, y, z, n):
    """Lexicographic rank of the sorted form of a vertex triple."""
    if x > y:
        x, y = y, x
    if y > z:
        y, z = z, y
    if x > y:
        x, y = y, x
    return (x * n + y) * n + z


@njit(cache=True)
def _key4(a, b, c, v, n):
    # a < b < c already; insert v
    if v < a:
        return ((v * n + a) * n + b) * n + c
    if v < b:
        return ((a * n + v) * n + b) * n + c
    if v < c:
        return ((a * n + b) * n + v) * n + c
    return ((a * n + b) * n + c) * n + v


@njit(cache=True)
def _is_apparent(d, a, b, c, vt, max_eps):
    """Whether triangle (a, b, c) forms an apparent pair with a tetrahedron.

    (t, T) is apparent when T is the earliest cofacet of t and t is the
    latest facet of T. Such pairs are persistence pairs of the next boundary
    matrix, so t reduces to zero in its own column and can be cleared
    without building the tetrahedra.
    """
    n = d.shape[0]
    best_val = np.inf
    best_key = -1
    best_v = -1
    da, db, dc = d[a], d[b], d[c]
    for v in range(n):
        m = da[v]
        if db[v] > m:
            m = db[v]
        if dc[v] > m:
            m = dc[v]
        if vt > m:
            m = vt
        if m > max_eps or m > best_val or v == a or v == b or v == c:
            continue
        key = _key4(a, b, c, v, n)
        if m < best_val or key < best_key:
            best_val = m
            best_key = key
            best_v = v
    if best_v < 0:
        return False
    # the other three facets of T all contain best_v
    me = (a * n + b) * n + c
    for x, y in ((a, b), (a, c), (b, c)):
        fv = max(d[x, y], d[x, best_v], d[y, best_v])
        if fv > vt or (fv == vt and _key3(x, y, best_v, n) > me):
            return False
    return True


@njit(cache=True)
def _symdiff(x, y):
    out = np.empty(x.shape[0] + y.shape[0], np.int64)
    i = j = k = 0
    while i < x.shape[0] and j < y.shape[0]:
        if x[i] < y[j]:
            out[k] = x[i]
            i += 1
            k += 1
        elif y[j] < x[i]:
            out[k] = y[j]
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < x.shape[0]:
        out[k] = x[i]
        i += 1
        k += 1
    while j < y.shape[0]:
        out[k] = y[j]
        j += 1
        k += 1
    return out[:k]


@njit(cache=True)
def _reduce(bnd, n_rows, skip, target, d, tri, tw, max_eps):
    """Left-to-right Z/2 column reduction.

    ``bnd`` holds each column's face indices sorted ascending. Columns with
    ``skip`` set are known to reduce to zero and are not touched. When
    ``tri`` is nonempty its rows are the columns' triangles, and each column
    is first tested for an apparent pair, so only visited columns pay for
    the test. The loop
    stops early once ``target`` pivots have been found, since at most that
    many rows can ever be paired. Returns pivot_col, where pivot_col[r] is the
    column whose reduced lowest entry is row r (or -1).
    """
    pivot_col = np.full(n_rows, -1, np.int64)
    start = np.zeros(bnd.shape[0], np.int64)
    length = np.zeros(bnd.shape[0], np.int64)
    pool = np.empty(max(16, 4 * bnd.shape[0]), np.int64)
    used = 0
    found = 0
    if target == 0:
        return pivot_col
    for j in range(bnd.shape[0]):
        if skip[j]:
            continue
        if tri.shape[0] and _is_apparent(d, tri[j, 0], tri[j, 1], tri[j, 2], tw[j], max_eps):
            continue
        col = bnd[j].astype(np.int64)
        while col.shape[0] > 0:
            k = pivot_col[col[-1]]
            if k == -1:
                break
            col = _symdiff(col, pool[start[k] : start[k] + length[k]])
        if col.shape[0] == 0:
            continue
        if used + col.shape[0] > pool.shape[0]:
            bigger = np.empty(2 * (used + col.shape[0]), np.int64)
            bigger[:used] = pool[:used]
            pool = bigger
        pool[used : used + col.shape[0]] = col
        start[j] = used
        length[j] = col.shape[0]
        used += col.shape[0]
        pivot_col[col[-1]] = j
        found += 1
        if found == target:
            break
    return pivot_col


_NO_TRI = np.zeros((0, 3), np.int64)


# --- engine ------------------------------------------------------------------


def _edges(d: np.ndarray, max_eps: float):
    n = d.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = d[iu, ju]
    keep = w <= max_eps
    iu, ju, w = iu[keep], ju[keep], w[keep]
    order = np.lexsort((ju, iu, w))
    return iu[order].astype(np.int64), ju[order].astype(np.int64), w[order]


def _sorted_simplices(verts: np.ndarray, d: np.ndarray):
    """Filtration values of simplices given as sorted vertex rows, and the filtration order."""
    k = verts.shape[1]
    val = np.zeros(verts.shape[0])
    for i in range(k):
        for j in range(i + 1, k):
            np.maximum(val, d[verts[:, i], verts[:, j]], out=val)
    order = np.lexsort((_keys(verts, d.shape[0]), val))
    return verts[order], val[order]


def _keys(verts: np.ndarray, n: int) -> np.ndarray:
    key = np.zeros(verts.shape[0], np.int64)
    for c in range(verts.shape[1]):
        key = key * n + verts[:, c]
    return key


def _face_index(faces: np.ndarray, ref: np.ndarray, n: int) -> np.ndarray:
    """Filtration index (in ``ref``) of each row of ``faces``."""
    ref_keys = _keys(ref, n)
    perm = np.argsort(ref_keys, kind="stable")
    pos = np.searchsorted(ref_keys[perm], _keys(faces, n))
    return perm[pos]


def _boundary(simp: np.ndarray, faces_ref: np.ndarray, n: int) -> np.ndarray:
    k = simp.shape[1]
    cols = []
    for drop in range(k):
        keep = [c for c in range(k) if c != drop]
        cols.append(_face_index(simp[:, keep], faces_ref, n))
    b = np.column_stack(cols)
    b.sort(axis=1)
    return b


def _as_matrix(d) -> np.ndarray:
    return d.entries if isinstance(d, DistanceMatrix) else np.asarray(d, dtype=np.float64)


def _resolve_eps(dm: np.ndarray, max_eps: Optional[float]):
    diam = float(dm.max()) if dm.size else 0.0
    if max_eps is None:
        max_eps = diam
    if not max_eps > 0 and dm.shape[0] > 1:
        raise DomainError(f"max_eps must be positive, got {max_eps}")
    return float(max_eps), bool(max_eps < diam)


def rips_persistence(
    d, max_dim: int = 1, max_eps: Optional[float] = None, *, clearing: bool = True
) -> PersistenceDiagram:
    """Persistence diagram of the Rips filtration of ``d`` up to ``max_eps``.

    ``max_eps`` defaults to the diameter, in which case nothing is truncated.
    Zero-length features are omitted. With ``max_dim=1``, ``clearing`` skips
    triangle columns that form apparent pairs; it never changes the result
    and exists so that can be checked.
    """
    if max_dim not in (0, 1, 2):
        raise DomainError(f"max_dim must be 0, 1 or 2, got {max_dim}")
    dm = _as_matrix(d)
    n = dm.shape[0]
    max_eps, truncated = _resolve_eps(dm, max_eps)
    feats: List[Feature] = []

    eu, ev, ew = _edges(dm, max_eps)
    merges = _union_find_h0(n, eu, ev) if n > 1 else np.zeros(0, np.bool_)
    for w in ew[merges]:
        if w > 0:
            feats.append(Feature(0, 0.0, float(w)))
    n_components = n - int(merges.sum())
    feats.extend(Feature(0, 0.0, math.inf, truncated) for _ in range(n_components))
    if max_dim == 0 or eu.size == 0:
        return PersistenceDiagram(tuple(feats), max_eps)

    adj = np.zeros((n, n), np.bool_)
    adj[eu, ev] = adj[ev, eu] = True
    tri = np.empty((_count_triangles(adj, eu, ev), 3), np.int64)
    _fill_triangles(adj, eu, ev, tri)
    tri, tw = _sorted_simplices(tri, dm)
    edges = np.column_stack([eu, ev])

    tri_cleared = np.zeros(tri.shape[0], np.bool_)
    if max_dim == 2 and tri.shape[0]:
        tet = np.empty((_count_tetrahedra(adj, tri), 4), np.int64)
        _fill_tetrahedra(adj, tri, tet)
        tet, qw = _sorted_simplices(tet, dm)
        if tet.shape[0]:
            piv3 = _reduce(
                _boundary(tet, tri, n), tri.shape[0], np.zeros(tet.shape[0], np.bool_), tet.shape[0], dm, _NO_TRI, qw, max_eps
            )
            paired = piv3 >= 0
            tri_cleared = paired
            for t in np.nonzero(paired)[0]:
                b, dth = tw[t], qw[piv3[t]]
                if dth > b:
                    feats.append(Feature(2, float(b), float(dth)))

    positive_edges = ~merges
    target = int(positive_edges.sum())
    bnd2 = _boundary(tri, edges, n) if tri.shape[0] else np.zeros((0, 3), np.int64)
    lazy = tri if max_dim == 1 and clearing else _NO_TRI
    piv2 = _reduce(bnd2, eu.size, tri_cleared, target if max_dim == 1 else tri.shape[0], dm, lazy, tw, max_eps)
    for e in np.nonzero(positive_edges)[0]:
        j = piv2[e]
        if j >= 0:
            if tw[j] > ew[e]:
                feats.append(Feature(1, float(ew[e]), float(tw[j])))
        else:
            feats.append(Feature(1, float(ew[e]), math.inf, truncated))

    if max_dim == 2:
        # triangles that reduced to zero and were not killed by a tetrahedron
        negative = np.zeros(tri.shape[0], np.bool_)
        negative[piv2[piv2 >= 0]] = True
        for t in np.nonzero(~negative & ~tri_cleared)[0]:
            feats.append(Feature(2, float(tw[t]), math.inf, truncated))
    return PersistenceDiagram(tuple(feats), max_eps)


def naive_rips_oracle(d, max_dim: int = 1, max_eps: Optional[float] = None) -> PersistenceDiagram:
    """Brute-force reference: the full boundary matrix reduced with no shortcuts.

    Every simplex up to dimension ``max_dim + 1`` is enumerated, so this
    refuses inputs with more than 12 points.
    """
    dm = _as_matrix(d)
    n = dm.shape[0]
    if n > ORACLE_MAX_POINTS:
        raise OracleRefusal(f"naive oracle handles at most {ORACLE_MAX_POINTS} points, got {n}")
    if max_dim not in (0, 1, 2):
        raise DomainError(f"max_dim must be 0, 1 or 2, got {max_dim}")
    max_eps, truncated = _resolve_eps(dm, max_eps)

    simplices = []
    for k in range(1, max_dim + 3):
        for s in itertools.combinations(range(n), k):
            v = max((dm[a, b] for a, b in itertools.combinations(s, 2)), default=0.0)
            if v <= max_eps:
                simplices.append((v, k - 1, s))
    simplices.sort()
    index = {s: i for i, (_, _, s) in enumerate(simplices)}
    columns = []
    for v, k, s in simplices:
        faces = set()
        if k > 0:
            for drop in range(k + 1):
                faces.add(index[s[:drop] + s[drop + 1 :]])
        columns.append(faces)

    low_of = {}
    lows = [-1] * len(columns)
    for j in range(len(columns)):
        col = columns[j]
        while col and max(col) in low_of:
            col = col ^ columns[low_of[max(col)]]
        columns[j] = col
        if col:
            lows[j] = max(col)
            low_of[max(col)] = j

    feats = []
    for i, (v, k, s) in enumerate(simplices):
        if columns[i] or k > max_dim:
            continue
        if i in low_of:
            death = simplices[low_of[i]][0]
            if death > v:
                feats.append(Feature(k, float(v), float(death)))
        else:
            feats.append(Feature(k, float(v), math.inf, truncated))
    return PersistenceDiagram(tuple(feats), max_eps)


def betti_at(diag: PersistenceDiagram, eps: float) -> tuple:
    """Betti numbers (b0, b1, b2) of the complex at scale ``eps``."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    counts = [0, 0, 0]
    for f in diag.features:
        if f.birth <= eps < f.death:
            counts[f.dim] += 1
    return tuple(counts)


def top_k_features(diag: PersistenceDiagram, dim: int, k: int) -> List[Feature]:
    """The ``k`` longest-lived finite features of one dimension."""
    if k <= 0:
        return []
    finite = [f for f in diag.in_dim(dim) if f.finite]
    finite.sort(key=lambda f: (-f.lifetime, f.birth))
    return finite[:k]


def ranked_features(diag: PersistenceDiagram, dim: int) -> List[Feature]:
    """All features of one dimension, truncated ones first, then by lifetime.

    A truncated feature outlives every finite one, so it ranks ahead of them;
    among truncated features the earlier birth is the longer-lived.
    """
    feats = diag.in_dim(dim)
    return sorted(feats, key=lambda f: (f.finite, -(f.lifetime if f.finite else -f.birth), f.birth))


def diagram_equal(a: PersistenceDiagram, b: PersistenceDiagram) -> bool:
    return a.features == b.features


__all__ = [
    "DistanceMatrix",
    "distance_matrix",
    "Feature",
    "PersistenceDiagram",
    "OracleRefusal",
    "rips_persistence",
    "naive_rips_oracle",
    "betti_at",
    "top_k_features",
    "ranked_features",
    "diagram_equal",
]

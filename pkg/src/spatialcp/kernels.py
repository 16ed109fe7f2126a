"""Metric kernels: Euclidean, great-circle (haversine), and symmetric rank
distance.

A kernel assigns every vertex pair a symmetric non-negative distance that
enters the edge-probability denominator.  Euclidean and great-circle kernels
are geometric (metrics over coordinates) and support the tree-code fast
paths; the rank kernel is table-backed and restricted to the exact paths.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataFormatError, DomainError, UnsupportedKernelError

EARTH_RADIUS_KM = 6371.0

_KINDS = ("euclidean", "great_circle", "rank")


def euclidean(x, y) -> float:
    """Euclidean distance between two equal-dimension position vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def _check_latlon(p):
    p = np.asarray(p, dtype=np.float64)
    lat, lon = p[..., 0], p[..., 1]
    if np.any(np.abs(lat) > 90.0) or np.any(np.abs(lon) > 180.0):
        raise DomainError("latitude/longitude out of range ([-90,90], [-180,180])")
    return p


def _haversine(p, q, radius):
    """Elementwise haversine distance; p, q are (..., 2) arrays in degrees."""
    lat1, lon1 = np.radians(p[..., 0]), np.radians(p[..., 1])
    lat2, lon2 = np.radians(q[..., 0]), np.radians(q[..., 1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * radius * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def great_circle(p, q, radius: float = EARTH_RADIUS_KM) -> float:
    """Great-circle (haversine) distance in km between (lat, lon) degree pairs.

    Haversine is preferred over the spherical law of cosines for numerical
    stability at small angles.
    """
    p = _check_latlon(p)
    q = _check_latlon(q)
    return float(_haversine(p, q, radius))


def build_rank_table(coords, base: str = "euclidean",
                     earth_radius: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Symmetric rank-distance table over all vertex pairs.

    The directed rank of v from u is ``|{w != u : d(u,w) < d(u,v)}| + 1``
    with ties broken by vertex index; the table entry is the mean of the two
    directed ranks, with a zero diagonal.  Memory is O(n^2), intended for
    small networks.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if base == "euclidean":
        D = cdist(coords, coords)
    elif base == "great_circle":
        _check_latlon(coords)
        D = _haversine(coords[:, None, :], coords[None, :, :], earth_radius)
    else:
        raise DataFormatError(f"unknown base kernel {base!r}")
    off = ~np.eye(n, dtype=bool)
    if np.any(D[off] == 0.0):
        raise DomainError(
            "coincident positions make rank distance undefined; "
            "re-load the coordinates with jitter enabled"
        )
    ranks = np.zeros((n, n), dtype=np.float64)
    partners = np.arange(n)
    for u in range(n):
        others = partners[partners != u]
        order = np.lexsort((others, D[u, others]))
        ranks[u, others[order]] = np.arange(1, n, dtype=np.float64)
    table = (ranks + ranks.T) / 2.0
    np.fill_diagonal(table, 0.0)
    return table


@dataclasses.dataclass
class KernelSpec:
    """A selected kernel plus its precomputed state.

    kind : one of 'euclidean', 'great_circle', 'rank'.
    earth_radius : sphere radius in km (great_circle only).
    rank_table : precomputed (n, n) symmetric table (rank only).
    """

    kind: str
    earth_radius: float = EARTH_RADIUS_KM
    rank_table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DataFormatError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rank":
            t = self.rank_table
            if t is None:
                raise DataFormatError("rank kernel requires a rank_table")
            t = np.asarray(t, dtype=np.float64)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise DataFormatError("rank_table must be square")
            if np.any(t < 0) or np.any(np.diag(t) != 0) or not np.array_equal(t, t.T):
                raise DataFormatError("rank_table must be symmetric, non-negative, zero-diagonal")
            self.rank_table = t

    @property
    def is_geometric(self) -> bool:
        return self.kind in ("euclidean", "great_circle")

    def point_distances(self, p, q) -> np.ndarray:
        """Elementwise distances between coordinate arrays (geometric only)."""
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if self.kind == "euclidean":
            return np.sqrt(((p - q) ** 2).sum(axis=-1))
        if self.kind == "great_circle":
            return _haversine(p, q, self.earth_radius)
        raise UnsupportedKernelError("rank kernel has no coordinate-space distance")

    def vertex_distances(self, coords, iu, iv) -> np.ndarray:
        """Elementwise distances for index arrays iu, iv."""
        iu = np.asarray(iu, dtype=np.int64)
        iv = np.asarray(iv, dtype=np.int64)
        if self.kind == "rank":
            return self.rank_table[iu, iv]
        return self.point_distances(coords[iu], coords[iv])

    def block_matrix(self, coords, rows) -> np.ndarray:
        """Distance matrix from the vertices in ``rows`` to all vertices."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.kind == "euclidean":
            return cdist(coords[rows], coords)
        if self.kind == "great_circle":
            return _haversine(coords[rows][:, None, :], coords[None, :, :],
                              self.earth_radius)
        return self.rank_table[rows]


def kernel_from_name(name: str, coords=None, earth_radius: float = EARTH_RADIUS_KM,
                     rank_base: str = "euclidean") -> KernelSpec:
    """Build a KernelSpec from a CLI-style name.

    ``greatcircle`` is accepted as an alias of ``great_circle``; the rank
    kernel builds its table from ``coords`` using ``rank_base``.
    """
    name = name.replace("-", "_")
    if name == "greatcircle":
        name = "great_circle"
    if name == "rank":
        if coords is None:
            raise DataFormatError("rank kernel requires coordinates to build its table")
        table = build_rank_table(coords, base=rank_base, earth_radius=earth_radius)
        return KernelSpec("rank", earth_radius=earth_radius, rank_table=table)
    return KernelSpec(name, earth_radius=earth_radius)

"""Reading and writing networks, coordinates, and model parameters.

File formats
------------
Edge list      : two whitespace-separated vertex ids per line.
Coordinate file: ``<id> <x1> ... <xd>`` per line, one line per vertex.
Parameter file : ``<label>\\t<theta>`` per vertex plus a final
                 ``epsilon\\t<value>`` line, 17 significant digits so a
                 write/load round trip is bit-faithful.

Lines starting with '#' and blank lines are skipped in all formats.
Vertex ids may be contiguous integers (used directly as indices) or
arbitrary strings (indexed in first-appearance order of the coordinate
file).
"""

from __future__ import annotations

import dataclasses
import io
import os
from typing import Optional, Sequence

import numpy as np

from .errors import DataFormatError


@dataclasses.dataclass
class LoadStats:
    """Bookkeeping from :func:`load_network`.

    ``raw_edge_lines == retained_edges + dropped_self_loops +
    dropped_duplicate_edges`` always holds (blank/comment lines excluded).
    """

    raw_edge_lines: int = 0
    retained_edges: int = 0
    dropped_self_loops: int = 0
    dropped_duplicate_edges: int = 0
    jittered_vertices: int = 0


@dataclasses.dataclass
class ModelParams:
    """Per-vertex core scores plus the scalar kernel exponent."""

    theta: np.ndarray
    epsilon: float

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.epsilon = float(self.epsilon)
        if self.theta.ndim != 1:
            raise DataFormatError("theta must be a 1-D array")
        if not np.all(np.isfinite(self.theta)):
            raise DataFormatError("theta contains non-finite entries")
        if not np.isfinite(self.epsilon):
            raise DataFormatError("epsilon is not finite")

    @property
    def n(self) -> int:
        return self.theta.shape[0]


class SpatialNetwork:
    """Undirected simple graph with per-vertex spatial coordinates.

    Parameters
    ----------
    coords : (n, d) array of vertex positions.
    edges : (m, 2) integer array of undirected edges, self-loop free.
    labels : optional vertex name strings (defaults to stringified indices).

    The edge set is canonicalized to ``u < v`` rows in lexicographic order;
    adjacency is additionally stored CSR-style for O(log deg) membership
    queries.  Instances are immutable after construction and safe to share.
    """

    def __init__(self, coords, edges, labels: Optional[Sequence[str]] = None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise DataFormatError("coords must be an (n, d) array with d >= 1")
        n = coords.shape[0]
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise DataFormatError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise DataFormatError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        canon = np.column_stack([lo, hi])[order]
        if canon.shape[0] > 1 and np.any(np.all(np.diff(canon, axis=0) == 0, axis=1)):
            raise DataFormatError("duplicate edges are not allowed")

        self.coords = coords
        self.coords.setflags(write=False)
        self.edges = canon
        self.edges.setflags(write=False)
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        if len(self.labels) != n:
            raise DataFormatError("labels length does not match vertex count")
        self.load_stats: Optional[LoadStats] = None

        # symmetric CSR adjacency, neighbor lists sorted per row
        both = np.concatenate([canon, canon[:, ::-1]], axis=0) if canon.size else canon
        if both.size:
            order = np.lexsort((both[:, 1], both[:, 0]))
            both = both[order]
            self._indices = both[:, 1].copy()
            self._indptr = np.searchsorted(both[:, 0], np.arange(n + 1))
        else:
            self._indices = np.empty(0, dtype=np.int64)
            self._indptr = np.zeros(n + 1, dtype=np.int64)
        self._indices.setflags(write=False)
        self._indptr.setflags(write=False)
        self.degrees = np.diff(self._indptr)
        self.degrees.setflags(write=False)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def neighbors(self, u: int) -> np.ndarray:
        return self._indices[self._indptr[u]:self._indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < row.shape[0] and row[k] == v)


def _data_lines(text: str, path: str):
    """Yield (lineno, stripped_line), skipping blanks and '#' comments."""
    count = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        count += 1
        yield lineno, line
    if count == 0:
        raise DataFormatError(f"{path}: no data lines found (empty file)")


def _read_text(source) -> tuple[str, str]:
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read(), os.fspath(source)


def _parse_coords(coord_source):
    text, path = _read_text(coord_source)
    ids: list[str] = []
    rows: list[list[float]] = []
    dim = None
    for lineno, line in _data_lines(text, path):
        tokens = line.split()
        if len(tokens) < 2:
            raise DataFormatError(f"{path}:{lineno}: expected '<id> <x1> ...'")
        vid, vals = tokens[0], tokens[1:]
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise DataFormatError(
                f"{path}:{lineno}: coordinate dimension {len(vals)} != {dim}"
            )
        try:
            row = [float(v) for v in vals]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: bad coordinate: {exc}") from None
        ids.append(vid)
        rows.append(row)
    if len(set(ids)) != len(ids):
        dup = next(v for v in ids if ids.count(v) > 1)
        raise DataFormatError(f"{path}: duplicate vertex id {dup!r}")

    n = len(ids)
    contiguous = False
    try:
        as_int = [int(v) for v in ids]
        contiguous = sorted(as_int) == list(range(n))
    except ValueError:
        pass

    coords = np.empty((n, dim), dtype=np.float64)
    if contiguous:
        index = {vid: as_int[k] for k, vid in enumerate(ids)}
        labels = [""] * n
        for k, vid in enumerate(ids):
            coords[as_int[k]] = rows[k]
            labels[as_int[k]] = vid
    else:
        index = {vid: k for k, vid in enumerate(ids)}
        labels = ids
        coords[:] = rows
    return coords, index, labels


def _parse_edges(edge_source, index):
    text, path = _read_text(edge_source)
    stats = LoadStats()
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for lineno, line in _data_lines(text, path):
        tokens = line.split()
        if len(tokens) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected two vertex ids")
        stats.raw_edge_lines += 1
        try:
            u = index[tokens[0]]
            v = index[tokens[1]]
        except KeyError as exc:
            raise DataFormatError(
                f"{path}:{lineno}: unknown vertex id {exc.args[0]!r}"
            ) from None
        if u == v:
            stats.dropped_self_loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            stats.dropped_duplicate_edges += 1
            continue
        seen.add(key)
        out.append(key)
    stats.retained_edges = len(out)
    return np.asarray(out, dtype=np.int64).reshape(-1, 2), stats


def _jitter_collisions(coords, jitter, seed):
    """Add uniform noise in [-jitter, +jitter] to vertices that share an
    exact position with another vertex, redrawing until all rows are
    pairwise distinct."""
    rng = np.random.default_rng(seed)
    coords = coords.copy()
    total = 0
    for _ in range(100):
        _, inverse, counts = np.unique(
            coords, axis=0, return_inverse=True, return_counts=True
        )
        colliding = counts[inverse] > 1
        if not colliding.any():
            return coords, total
        total += int(colliding.sum())
        noise = rng.uniform(-jitter, jitter, size=(int(colliding.sum()), coords.shape[1]))
        coords[colliding] += noise
    raise DataFormatError(
        "could not separate coincident coordinates; increase --jitter"
    )


def load_network(edge_source, coord_source, jitter: Optional[float] = None,
                 seed: int = 0) -> SpatialNetwork:
    """Load a SpatialNetwork from an edge list and a coordinate table.

    Parameters
    ----------
    edge_source, coord_source : path or open text file.
    jitter : if given, uniform noise in [-jitter, +jitter] per coordinate is
        added to vertices sharing an exact position with another vertex (and
        only to those), deterministically for a fixed ``seed``.
    seed : RNG seed for the jitter draw.

    Self-loops and duplicate edges in the input are dropped; counts are
    available on the returned network's ``load_stats``.
    """
    coords, index, labels = _parse_coords(coord_source)
    edges, stats = _parse_edges(edge_source, index)
    if jitter is not None:
        coords, stats.jittered_vertices = _jitter_collisions(coords, jitter, seed)
    net = SpatialNetwork(coords, edges, labels)
    net.load_stats = stats
    return net


def write_params(params: ModelParams, labels: Optional[Sequence[str]], sink) -> None:
    """Write parameters as ``label<TAB>theta`` lines plus a final
    ``epsilon<TAB>value`` line, 17 significant digits (bit-faithful)."""
    if labels is None:
        labels = [str(i) for i in range(params.n)]
    if len(labels) != params.n:
        raise DataFormatError("labels length does not match theta length")
    buf = io.StringIO()
    for label, th in zip(labels, params.theta):
        buf.write(f"{label}\t{th:.17g}\n")
    buf.write(f"epsilon\t{params.epsilon:.17g}\n")
    if hasattr(sink, "write"):
        sink.write(buf.getvalue())
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())


def load_params(source) -> tuple[ModelParams, list[str]]:
    """Inverse of :func:`write_params`; returns (params, labels)."""
    text, path = _read_text(source)
    lines = list(_data_lines(text, path))
    lineno, last = lines[-1]
    tokens = last.split("\t")
    if len(tokens) != 2 or tokens[0] != "epsilon":
        raise DataFormatError(f"{path}:{lineno}: final line must be 'epsilon<TAB>value'")
    epsilon = float(tokens[1])
    labels = []
    theta = []
    for lineno, line in lines[:-1]:
        tokens = line.split("\t")
        if len(tokens) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'label<TAB>theta'")
        labels.append(tokens[0])
        theta.append(float(tokens[1]))
    return ModelParams(np.asarray(theta, dtype=np.float64), epsilon), labels

"""Exact (quadratic-cost) log-likelihood, gradients, and expected statistics.

Model: each unordered vertex pair (u, v) is an edge independently with
probability

    rho_uv = e^{theta_u + theta_v} / (e^{theta_u + theta_v} + K_uv^epsilon),

i.e. rho_uv = sigmoid(x_uv) with x_uv = theta_u + theta_v - epsilon*log K_uv.
All log-probabilities are evaluated through softplus so that extreme scores
(theta sums up to +-700) neither overflow nor lose the log(1-rho) tail:

    log rho      = -softplus(-x)
    log (1-rho)  = -softplus(x)

The log-likelihood over all pairs decomposes as

    Omega = sum_{(u,v) in E} x_uv  -  sum_{u<v} softplus(x_uv),

with gradients

    dOmega/dtheta_w  = deg(w) - sum_{u != w} rho_wu
    dOmega/depsilon  = -sum_{(u,v) in E} log K_uv + sum_{u<v} rho_uv log K_uv.

A pair forced to rho in {0, 1} against its adjacency (possible only for
coincident positions) makes Omega -inf; this is reported through a
``degenerate`` flag rather than an exception so optimizers can reject the
step.  Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import expit

from .errors import DomainError
from .graph_io import ModelParams, SpatialNetwork
from .kernels import KernelSpec
from .numutils import softplus


@dataclasses.dataclass
class Evaluation:
    """Log-likelihood value plus gradients and expected model statistics."""

    omega: float
    grad_theta: np.ndarray
    grad_epsilon: float
    expected_degrees: np.ndarray
    expected_agg_logdist: float
    degenerate: bool = False

    @property
    def expected_edge_count(self) -> float:
        return 0.5 * float(self.expected_degrees.sum())


def edge_prob(theta_u: float, theta_v: float, K: float, epsilon: float) -> float:
    """Edge probability of a single pair, stable for theta sums up to +-700.

    K = 0 requires epsilon >= 0: the probability is 1 for epsilon > 0 and
    falls back to the kernel-free model (K^0 == 1) for epsilon == 0.
    """
    if K < 0:
        raise DomainError("kernel distance must be non-negative")
    s = theta_u + theta_v
    if K == 0.0:
        if epsilon < 0:
            raise DomainError("K = 0 with negative epsilon is undefined")
        if epsilon > 0:
            return 1.0
        return float(expit(s))
    return float(expit(s - epsilon * np.log(K)))


def edge_log_distances(network: SpatialNetwork, kernel: KernelSpec) -> np.ndarray:
    """log K_uv per edge; DomainError on any zero-length edge."""
    d = kernel.vertex_distances(network.coords, network.edges[:, 0], network.edges[:, 1])
    if np.any(d <= 0.0):
        k = int(np.argmax(d <= 0.0))
        u, v = network.edges[k]
        raise DomainError(f"edge ({u}, {v}) has zero kernel distance; log is undefined")
    return np.log(d)


def aggregated_log_distance(network: SpatialNetwork, kernel: KernelSpec) -> float:
    """Sum of log kernel distances over the edges (total log edge length)."""
    return float(edge_log_distances(network, kernel).sum())


class ExactEvaluator:
    """Chunked all-pairs evaluator, reusable across parameter values.

    Distance chunks are cached for repeated evaluations (optimizer inner
    loop) when the network is small enough; set ``cache_distances=False``
    to force recomputation per call.
    """

    _CHUNK = 512
    _CACHE_MAX_N = 2500

    def __init__(self, network: SpatialNetwork, kernel: KernelSpec,
                 cache_distances: bool | None = None):
        self.network = network
        self.kernel = kernel
        if cache_distances is None:
            cache_distances = network.n <= self._CACHE_MAX_N
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] | None = (
            {} if cache_distances else None
        )
        self._edge_logdist: np.ndarray | None = None

    def _chunk(self, s: int, e: int):
        """(distances, log distances) for rows s:e against all columns."""
        if self._cache is not None and s in self._cache:
            return self._cache[s]
        D = self.kernel.block_matrix(self.network.coords, np.arange(s, e))
        with np.errstate(divide="ignore"):
            L = np.log(D)
        if self._cache is not None:
            self._cache[s] = (D, L)
        return D, L

    def _edge_term_x(self, params: ModelParams):
        """x_uv per edge; zero-distance edges are excluded (they contribute
        log 1 = 0 when epsilon > 0)."""
        net = self.network
        if net.num_edges == 0:
            return np.empty(0), np.empty(0, dtype=bool)
        d = self.kernel.vertex_distances(net.coords, net.edges[:, 0], net.edges[:, 1])
        th = params.theta
        s = th[net.edges[:, 0]] + th[net.edges[:, 1]]
        finite = d > 0.0
        if params.epsilon < 0 and not finite.all():
            raise DomainError("zero kernel distance with negative epsilon")
        with np.errstate(divide="ignore"):
            x = np.where(finite, s - params.epsilon * np.log(np.where(finite, d, 1.0)), np.inf)
        if params.epsilon == 0.0:
            x = s.copy()
            finite = np.ones_like(finite)
        return x, finite

    def evaluate(self, params: ModelParams, need_grad: bool = True,
                 need_epsilon_grad: bool = True) -> Evaluation:
        net, kernel = self.network, self.kernel
        n = net.n
        th = params.theta
        if th.shape[0] != n:
            raise DomainError(f"theta has length {th.shape[0]}, expected {n}")
        eps = params.epsilon

        x_edges, finite_edges = self._edge_term_x(params)
        edge_term = float(x_edges[finite_edges].sum())

        pairs_softplus = 0.0
        degenerate = False
        edeg = np.zeros(n) if need_grad else None
        rho_logk = 0.0

        for s in range(0, n, self._CHUNK):
            e = min(s + self._CHUNK, n)
            D, L = self._chunk(s, e)
            rows = np.arange(s, e)
            X = th[rows][:, None] + th[None, :]
            zero_off = None
            if eps != 0.0:
                if eps < 0 and bool((D == 0.0).sum() > (e - s)):
                    raise DomainError("zero kernel distance with negative epsilon")
                X = X - eps * L  # D == 0 gives L = -inf, hence X = +inf for eps > 0
            # remove the diagonal from every accumulation
            X[np.arange(e - s), rows] = -np.inf
            if eps > 0.0:
                zero_off = D == 0.0
                zero_off[np.arange(e - s), rows] = False

            sp = softplus(X)
            if zero_off is not None and zero_off.any():
                # coincident pair: rho = 1. An edge contributes log 1 = 0 (its
                # +inf edge term was excluded as well); a non-edge is a hard
                # conflict and drives Omega to -inf.
                sp[zero_off] = 0.0
                ws, us = np.nonzero(zero_off)
                for w, u in zip(ws + s, us):
                    if not net.has_edge(int(w), int(u)):
                        degenerate = True
            pairs_softplus += float(sp.sum())

            if need_grad:
                P = expit(X)
                edeg[rows] = P.sum(axis=1)
                if need_epsilon_grad:
                    row_zeros = (D == 0.0).sum(axis=1)
                    if np.any(row_zeros > 1):
                        w = int(rows[np.argmax(row_zeros > 1)])
                        zr = np.flatnonzero(D[w - s] == 0.0)
                        u = int(zr[zr != w][0])
                        raise DomainError(
                            f"pair ({w}, {u}) has zero kernel distance; "
                            "epsilon gradient is undefined (enable jitter)"
                        )
                    with np.errstate(invalid="ignore"):
                        PL = P * L
                    PL[np.arange(e - s), rows] = 0.0
                    rho_logk += float(PL.sum())

        omega = edge_term - 0.5 * pairs_softplus
        if degenerate:
            omega = -np.inf
        if not need_grad:
            return Evaluation(omega, np.empty(0), np.nan, np.empty(0), np.nan,
                              degenerate=degenerate)

        grad_theta = net.degrees.astype(np.float64) - edeg
        expected_agg = 0.5 * rho_logk
        if need_epsilon_grad:
            agg_edges = aggregated_log_distance(net, kernel)
            grad_eps = -agg_edges + expected_agg
        else:
            grad_eps, expected_agg = np.nan, np.nan
        return Evaluation(omega, grad_theta, grad_eps, edeg, expected_agg,
                          degenerate=degenerate)


def omega(network: SpatialNetwork, params: ModelParams, kernel: KernelSpec) -> float:
    """Exact log-likelihood over all unordered vertex pairs (O(n^2))."""
    ev = ExactEvaluator(network, kernel, cache_distances=False)
    return ev.evaluate(params, need_grad=False).omega


def grad(network: SpatialNetwork, params: ModelParams, kernel: KernelSpec) -> Evaluation:
    """Exact likelihood value, gradients, and expected statistics (O(n^2))."""
    ev = ExactEvaluator(network, kernel, cache_distances=False)
    return ev.evaluate(params, need_grad=True)

"""Markov-chain mobility on a shared location graph.

All users move on one directed graph over states ``0..r-1`` (reported
1-based in files and reports). Row-stochasticity removes one degree of
freedom per state, so a graph with edge set E has d = |E| - r free
transition probabilities; each state has exactly one dependent out-edge
whose probability is forced by the row sum. The map from the free
parameter vector to the full transition matrix is affine (dependent
probability = 1 - sum of the row's free entries).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mobility import BOUNDARY_MARGIN, Trajectory, _readonly

__all__ = [
    "ChainReport",
    "DependencyMap",
    "FreeParamVector",
    "MarkovModel",
    "MobilityGraph",
    "TransitionMatrix",
    "contract_transition_matrix",
    "degrees_of_freedom",
    "expand_free_params",
    "fit_markov_profile",
    "load_graph_csv",
    "sample_free_params",
    "sample_trajectory_markov",
    "stationary_distribution",
    "validate_chain",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MobilityGraph:
    """Directed graph of permitted transitions plus the free-edge choice.

    ``edges`` is kept sorted row-major; ``free_edges`` is the ordered
    subset carrying the free parameters (order inherited from ``edges``).
    If ``free_edges`` is None the canonical rule applies: in every row,
    all out-edges except the one with the lexicographically largest
    target are free.
    """

    r: int
    edges: tuple
    free_edges: tuple = None

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError("graph needs at least one state")
        edges = sorted(set((int(i), int(j)) for i, j in self.edges))
        for i, j in edges:
            if not (0 <= i < self.r and 0 <= j < self.r):
                raise ValueError(f"edge ({i},{j}) out of range for r={self.r}")
        out = [[] for _ in range(self.r)]
        for i, j in edges:
            out[i].append(j)
        for i, targets in enumerate(out):
            if not targets:
                raise ValueError(f"state {i} has no outgoing edge")
        if self.free_edges is None:
            free = [(i, j) for i, targets in enumerate(out) for j in targets[:-1]]
        else:
            free = sorted(set((int(i), int(j)) for i, j in self.free_edges))
            if not set(free) <= set(edges):
                raise ValueError("free edges must be a subset of the edge set")
            for i, targets in enumerate(out):
                n_free = sum(1 for (a, _) in free if a == i)
                if n_free != len(targets) - 1:
                    raise ValueError(
                        f"state {i} must have exactly one dependent out-edge"
                    )
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "free_edges", tuple(free))

    @property
    def d(self) -> int:
        return len(self.edges) - self.r

    def out_edges(self, i: int) -> list[tuple[int, int]]:
        return [(a, b) for (a, b) in self.edges if a == i]

    def dependent_edge(self, i: int) -> tuple[int, int]:
        free = set(self.free_edges)
        dep = [e for e in self.out_edges(i) if e not in free]
        return dep[0]

    def support_mask(self) -> np.ndarray:
        mask = np.zeros((self.r, self.r), dtype=bool)
        for i, j in self.edges:
            mask[i, j] = True
        return mask


@dataclass(frozen=True)
class MarkovModel:
    """Model descriptor for Markov mobility on a fixed graph."""

    graph: MobilityGraph


@dataclass(frozen=True)
class FreeParamVector:
    """The d free transition probabilities, ordered like graph.free_edges."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("free parameters must be a flat vector")
        if values.size and not np.all((values > 0.0) & (values < 1.0)):
            raise ValueError("free parameters must lie strictly in (0, 1)")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def d(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix supported on the graph's edge set.

    Rows sum to 1 within 1e-12 and positive entries stay inside E;
    whether the chain is irreducible/aperiodic is reported separately by
    validate_chain (fitted matrices may leave some edges of E unused).
    """

    matrix: np.ndarray
    graph: MobilityGraph

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        r = self.graph.r
        if matrix.shape != (r, r):
            raise ValueError(f"matrix must be {r}x{r}")
        if matrix.min() < 0.0:
            raise ValueError("transition probabilities must be nonnegative")
        if np.abs(matrix.sum(axis=1) - 1.0).max() > _ROW_SUM_TOL:
            raise ValueError("rows must sum to 1 within 1e-12")
        if np.any((matrix > 0.0) & ~self.graph.support_mask()):
            raise ValueError("positive entry outside the graph's edge set")
        object.__setattr__(self, "matrix", _readonly(matrix))

    @property
    def r(self) -> int:
        return self.graph.r


@dataclass(frozen=True)
class DependencyMap:
    """Affine map between free parameters and full transition matrices."""

    graph: MobilityGraph

    def expand(self, params: FreeParamVector) -> TransitionMatrix:
        return expand_free_params(params, self)

    def contract(self, T: TransitionMatrix) -> FreeParamVector:
        return contract_transition_matrix(T, self)


@dataclass(frozen=True)
class ChainReport:
    irreducible: bool
    aperiodic: bool


def degrees_of_freedom(graph: MobilityGraph) -> int:
    """|E| - r: free transition parameters after row-sum constraints."""
    return graph.d


def expand_free_params(
    params: FreeParamVector | Sequence[float], dmap: DependencyMap | MobilityGraph
) -> TransitionMatrix:
    """Fill the free edges verbatim, force each dependent edge by the row sum.

    Raises if any free entry leaves (0, 1) or any dependent probability is
    not strictly positive.
    """
    graph = dmap.graph if isinstance(dmap, DependencyMap) else dmap
    if not isinstance(params, FreeParamVector):
        params = FreeParamVector(np.asarray(params, dtype=float))
    if params.d != graph.d:
        raise ValueError(f"expected {graph.d} free parameters, got {params.d}")
    T = np.zeros((graph.r, graph.r))
    for (i, j), p in zip(graph.free_edges, params.values):
        T[i, j] = p
    for i in range(graph.r):
        dep_i, dep_j = graph.dependent_edge(i)
        residual = 1.0 - T[i].sum()
        if residual <= 0.0:
            raise ValueError(
                f"free parameters of state {i} leave no probability for the "
                f"dependent edge ({dep_i},{dep_j})"
            )
        T[dep_i, dep_j] = residual
    return TransitionMatrix(matrix=T, graph=graph)


def contract_transition_matrix(
    T: TransitionMatrix, dmap: DependencyMap | MobilityGraph
) -> FreeParamVector:
    """Read the free-edge probabilities back out of a transition matrix."""
    graph = dmap.graph if isinstance(dmap, DependencyMap) else dmap
    values = np.array([T.matrix[i, j] for (i, j) in graph.free_edges])
    return FreeParamVector(values)


def _successors(matrix: np.ndarray) -> list[list[int]]:
    return [list(np.nonzero(matrix[i] > 0.0)[0]) for i in range(matrix.shape[0])]


def _reachable(succ: list[list[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _strongly_connected_components(succ: list[list[int]]) -> list[list[int]]:
    # Iterative Tarjan.
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            u, pi = work[-1]
            if pi == 0:
                index[u] = low[u] = counter
                counter += 1
                stack.append(u)
                on_stack[u] = True
            advanced = False
            for k in range(pi, len(succ[u])):
                v = succ[u][k]
                if index[v] == -1:
                    work[-1] = (u, k + 1)
                    work.append((v, 0))
                    advanced = True
                    break
                if on_stack[v]:
                    low[u] = min(low[u], index[v])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[u])
            if low[u] == index[u]:
                comp = []
                while True:
                    v = stack.pop()
                    on_stack[v] = False
                    comp.append(v)
                    if v == u:
                        break
                comps.append(comp)
    return comps


def _component_period(succ: list[list[int]], comp: list[int]) -> int:
    """gcd of cycle lengths inside one strongly connected component."""
    members = set(comp)
    depth = {comp[0]: 0}
    order = [comp[0]]
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for v in succ[u]:
            if v in members and v not in depth:
                depth[v] = depth[u] + 1
                order.append(v)
    g = 0
    for u in comp:
        for v in succ[u]:
            if v in members:
                g = math.gcd(g, depth[u] + 1 - depth[v])
    return abs(g)


def validate_chain(T: TransitionMatrix) -> ChainReport:
    """Report irreducibility (one SCC) and aperiodicity (cycle gcd 1)."""
    succ = _successors(T.matrix)
    comps = _strongly_connected_components(succ)
    irreducible = len(comps) == 1
    g = 0
    for comp in comps:
        members = set(comp)
        has_internal = any(v in members for u in comp for v in succ[u])
        if has_internal:
            g = math.gcd(g, _component_period(succ, comp))
    aperiodic = g == 1
    return ChainReport(irreducible=irreducible, aperiodic=aperiodic)


def stationary_distribution(T: TransitionMatrix) -> np.ndarray:
    """Solve pi T = pi, sum(pi) = 1 for an irreducible aperiodic chain."""
    report = validate_chain(T)
    if not (report.irreducible and report.aperiodic):
        raise ValueError(f"chain is not irreducible+aperiodic: {report}")
    r = T.r
    A = T.matrix.T - np.eye(r)
    A[-1, :] = 1.0
    b = np.zeros(r)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    residual = np.abs(pi @ T.matrix - pi).max()
    if residual > 1e-10:
        raise ValueError(f"stationary solve residual {residual:.3e} exceeds 1e-10")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def sample_trajectory_markov(
    T: TransitionMatrix, m: int, rng: np.random.Generator
) -> Trajectory:
    """Length-m walk starting at state 0 (label 1 in external files)."""
    if m < 1:
        raise ValueError("Markov trajectories need at least one observation")
    cdf = np.cumsum(T.matrix, axis=1)
    cdf[:, -1] = 1.0
    states = np.empty(m, dtype=np.int64)
    states[0] = 0
    u = rng.random(m - 1) if m > 1 else np.empty(0)
    cur = 0
    for t in range(1, m):
        cur = int(np.searchsorted(cdf[cur], u[t - 1], side="right"))
        states[t] = cur
    return Trajectory(states=states)


def sample_free_params(
    graph: MobilityGraph, rng: np.random.Generator
) -> FreeParamVector:
    """Uniform draw from R_p: per row, free entries uniform on the open
    sub-simplex that leaves positive mass for the dependent edge."""
    values = np.empty(len(graph.free_edges))
    pos = 0
    for i in range(graph.r):
        n_free = sum(1 for (a, _) in graph.free_edges if a == i)
        if n_free == 0:
            continue
        while True:
            x = rng.dirichlet(np.ones(n_free + 1))
            if x.min() >= BOUNDARY_MARGIN:
                break
        values[pos : pos + n_free] = x[:-1]
        pos += n_free
    return FreeParamVector(values)


def fit_markov_profile(
    trace: Trajectory, graph: MobilityGraph, smoothing: float = 1.0
) -> TransitionMatrix:
    """Smoothed transition-frequency estimate on the graph's edges.

    T(i,j) = (M(i,j) + smoothing) / (departures_i + outdeg_i * smoothing),
    with smoothing mass spread only over edges of E.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    states = trace.states
    if states.size < 2:
        raise ValueError("need at least two observations to fit transitions")
    if states.max() >= graph.r:
        raise ValueError(f"trace contains state >= r={graph.r}")
    support = graph.support_mask()
    M = np.zeros((graph.r, graph.r))
    for a, b in zip(states[:-1], states[1:]):
        if not support[a, b]:
            raise ValueError(f"trace uses transition ({a},{b}) not in the graph")
        M[a, b] += 1.0
    T = np.zeros_like(M)
    for i in range(graph.r):
        row_edges = support[i]
        denom = M[i].sum() + row_edges.sum() * smoothing
        if denom == 0.0:
            raise ValueError(
                f"state {i} has no observed departures and smoothing is 0"
            )
        T[i, row_edges] = (M[i, row_edges] + smoothing) / denom
    return TransitionMatrix(matrix=T, graph=graph)


def load_graph_csv(path: str) -> MobilityGraph:
    """Read a graph file: header ``from,to,free``, 1-based state labels,
    free in {0, 1, auto}. All-auto selects the canonical free-edge rule;
    mixing auto with explicit flags is rejected."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
            "from",
            "to",
            "free",
        ]:
            raise ValueError("graph file must have header 'from,to,free'")
        edges = []
        flags = []
        for row in reader:
            try:
                i = int(row["from"]) - 1
                j = int(row["to"]) - 1
            except (TypeError, ValueError) as exc:
                raise ValueError(f"bad graph row {row!r}") from exc
            flag = (row["free"] or "").strip().lower()
            if flag not in ("0", "1", "auto"):
                raise ValueError(f"free flag must be 0, 1 or auto, got {flag!r}")
            edges.append((i, j))
            flags.append(flag)
    if not edges:
        raise ValueError("graph file has no edges")
    r = max(max(i, j) for i, j in edges) + 1
    if all(f == "auto" for f in flags):
        return MobilityGraph(r=r, edges=tuple(edges))
    if any(f == "auto" for f in flags):
        raise ValueError("graph file mixes auto with explicit free flags")
    free = tuple(e for e, f in zip(edges, flags) if f == "1")
    return MobilityGraph(r=r, edges=tuple(edges), free_edges=free)

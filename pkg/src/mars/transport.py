"""Exact Earth Mover's Distance between masked patch distributions.

``solve_emd`` is a transportation-simplex (network simplex on the dense
bipartite graph): north-west-corner starting basis, dual potentials, most
negative reduced cost pivoting with a Bland-rule fallback against cycling.
``emd_oracle`` answers the same question by a route that shares no code
with the solver: exhaustive enumeration of every spanning-tree basis when
the problem is small enough, otherwise a generic LP solve.  The oracle
exists for verification and is capped at 64 cells.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DimMismatch,
    EmptyProposalMask,
    InfeasibleZeroMass,
    InvalidValue,
    TooLarge,
    UnbalancedProblem,
)
from .visual import CostMatrix

BALANCE_TOL = 1e-9
MARGINAL_TOL = 1e-7
_OPT_TOL = 1e-10
_ENUM_CELLS = 12


@dataclass
class TransportProblem:
    """Ground costs plus unit supply and demand masses."""

    cost: np.ndarray     # (n, m) in [0, 1]
    supply: np.ndarray   # (n,) non-negative, sums to 1
    demand: np.ndarray   # (m,) non-negative, sums to 1

    def __post_init__(self) -> None:
        self.cost = np.asarray(self.cost, dtype=np.float64)
        self.supply = np.asarray(self.supply, dtype=np.float64)
        self.demand = np.asarray(self.demand, dtype=np.float64)

    def validate(self) -> None:
        if self.cost.ndim != 2:
            raise DimMismatch(f"cost has rank {self.cost.ndim}, expected 2")
        n, m = self.cost.shape
        if self.supply.shape != (n,) or self.demand.shape != (m,):
            raise DimMismatch(
                f"cost is {n} x {m} but supply has {self.supply.shape} and "
                f"demand {self.demand.shape}"
            )
        if (self.supply < 0).any() or (self.demand < 0).any():
            raise InvalidValue("transport masses must be non-negative")
        if self.supply.size == 0 or self.demand.size == 0:
            raise InfeasibleZeroMass("empty supply or demand side")
        if self.supply.sum() == 0 or self.demand.sum() == 0:
            raise InfeasibleZeroMass("all masses on one side are zero")
        if abs(self.supply.sum() - 1.0) > BALANCE_TOL or abs(self.demand.sum() - 1.0) > BALANCE_TOL:
            raise UnbalancedProblem(
                f"masses sum to {self.supply.sum()!r} and {self.demand.sum()!r}, expected 1"
            )


def masked_distributions(
    cost: CostMatrix,
    support_masks_patch: list[np.ndarray],
    proposal_patch: np.ndarray,
) -> TransportProblem:
    """Uniform masses over support FG rows and proposal FG cells.

    The cost matrix rows already correspond to support foreground patches;
    columns are restricted to the proposal's foreground cells.
    """
    n_fg = cost.c.shape[0]
    total_fg = int(sum(int(mask.sum()) for mask in support_masks_patch))
    if total_fg != n_fg:
        raise DimMismatch(f"support masks carry {total_fg} FG patches, cost has {n_fg} rows")
    flat = proposal_patch.ravel()
    if flat.size != cost.c.shape[1]:
        raise DimMismatch(
            f"proposal grid has {flat.size} cells, cost has {cost.c.shape[1]} columns"
        )
    columns = np.flatnonzero(flat)
    if columns.size == 0:
        raise EmptyProposalMask("proposal covers no patch cell")
    if n_fg == 0:
        raise InfeasibleZeroMass("no support foreground patch to supply mass from")
    supply = np.full(n_fg, 1.0 / n_fg)
    demand = np.full(columns.size, 1.0 / columns.size)
    return TransportProblem(cost=cost.c[:, columns], supply=supply, demand=demand)


# -- transportation simplex ---------------------------------------------------

def _northwest_basis(supply: np.ndarray, demand: np.ndarray) -> list[tuple[int, int, float]]:
    """Staircase starting basis: exactly n + m - 1 cells, some possibly zero."""
    n, m = supply.size, demand.size
    a = supply.copy()
    b = demand.copy()
    cells = []
    i = j = 0
    while True:
        q = min(a[i], b[j])
        cells.append((i, j, q))
        a[i] -= q
        b[j] -= q
        if i == n - 1 and j == m - 1:
            break
        if i < n - 1 and a[i] == 0.0:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1
    return cells


def _tree_duals(basic: np.ndarray, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Potentials u, v with u_i + v_j = c_ij on every basic cell."""
    n, m = cost.shape
    row_cells = [[] for _ in range(n)]
    col_cells = [[] for _ in range(m)]
    for i, j in zip(*np.nonzero(basic)):
        row_cells[i].append(j)
        col_cells[j].append(i)
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    u[0] = 0.0
    stack = [("r", 0)]
    while stack:
        kind, idx = stack.pop()
        if kind == "r":
            for j in row_cells[idx]:
                if np.isnan(v[j]):
                    v[j] = cost[idx, j] - u[idx]
                    stack.append(("c", j))
        else:
            for i in col_cells[idx]:
                if np.isnan(u[i]):
                    u[i] = cost[i, idx] - v[idx]
                    stack.append(("r", i))
    assert not np.isnan(u).any() and not np.isnan(v).any(), "basis is not a spanning tree"
    return u, v


def _tree_cycle(basic: np.ndarray, enter: tuple[int, int]) -> list[tuple[int, int]]:
    """Path of basic cells linking the entering cell's row to its column."""
    n, m = basic.shape
    row_cells = [[] for _ in range(n)]
    col_cells = [[] for _ in range(m)]
    for i, j in zip(*np.nonzero(basic)):
        row_cells[i].append(j)
        col_cells[j].append(i)
    start = ("r", enter[0])
    goal = ("c", enter[1])
    parents: dict[tuple[str, int], tuple[tuple[str, int], tuple[int, int]]] = {start: (start, (-1, -1))}
    frontier = [start]
    while frontier and goal not in parents:
        node = frontier.pop()
        kind, idx = node
        if kind == "r":
            neighbors = [(("c", j), (idx, j)) for j in row_cells[idx]]
        else:
            neighbors = [(("r", i), (i, idx)) for i in col_cells[idx]]
        for nxt, cell in neighbors:
            if nxt not in parents:
                parents[nxt] = (node, cell)
                frontier.append(nxt)
    assert goal in parents, "entering cell is not linked by the basis tree"
    path = []
    node = goal
    while node != start:
        node, cell = parents[node]
        path.append(cell)
    path.reverse()
    return path


def _simplex(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    n, m = cost.shape
    flow = np.zeros((n, m))
    basic = np.zeros((n, m), dtype=bool)
    for i, j, q in _northwest_basis(supply, demand):
        flow[i, j] = q
        basic[i, j] = True

    bland = False
    stalled = 0
    max_iter = 200 * (n + m) ** 2 + 1000
    for _ in range(max_iter):
        u, v = _tree_duals(basic, cost)
        reduced = cost - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        if bland:
            candidates = np.argwhere(reduced < -_OPT_TOL)
            if candidates.size == 0:
                return flow
            enter = tuple(candidates[0])
        else:
            enter = np.unravel_index(np.argmin(reduced), reduced.shape)
            if reduced[enter] >= -_OPT_TOL:
                return flow
        path = _tree_cycle(basic, enter)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leave = min(c for c in minus if flow[c] == theta)
        flow[enter] += theta
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[leave] = 0.0
        basic[leave] = False
        basic[enter] = True
        if theta <= 1e-14:
            stalled += 1
            if stalled > 2 * (n + m):
                bland = True
        else:
            stalled = 0
    raise AssertionError("transportation simplex failed to terminate")


def solve_emd(p: TransportProblem) -> tuple[float, np.ndarray]:
    """Minimal transport cost and an optimal plan.

    The plan's row sums equal the supply and its column sums the demand
    (within 1e-7); the value is exact up to f64 arithmetic.  Zero-mass
    rows and columns are solved implicitly and come back as zero flow.
    """
    p.validate()
    rows = np.flatnonzero(p.supply > 0)
    cols = np.flatnonzero(p.demand > 0)
    inner = _simplex(p.cost[np.ix_(rows, cols)], p.supply[rows], p.demand[cols])
    plan = np.zeros_like(p.cost)
    plan[np.ix_(rows, cols)] = np.clip(inner, 0.0, None)
    value = float((plan * p.cost).sum())
    return value, plan


# -- independent oracle -------------------------------------------------------

def _basis_flows(
    cells: tuple[tuple[int, int], ...], supply: np.ndarray, demand: np.ndarray
) -> list[tuple[int, int, float]] | None:
    """Solve the flows a spanning-tree support forces, by leaf elimination.

    Returns None when the cells contain a cycle (no leaf to peel) or the
    forced flows go negative beyond rounding.
    """
    a = supply.astype(np.float64).copy()
    b = demand.astype(np.float64).copy()
    remaining = list(cells)
    flows: list[tuple[int, int, float]] = []
    while remaining:
        row_deg: dict[int, int] = {}
        col_deg: dict[int, int] = {}
        for i, j in remaining:
            row_deg[i] = row_deg.get(i, 0) + 1
            col_deg[j] = col_deg.get(j, 0) + 1
        leaf = next(
            (
                (i, j)
                for i, j in remaining
                if row_deg[i] == 1 or col_deg[j] == 1
            ),
            None,
        )
        if leaf is None:
            return None
        i, j = leaf
        q = a[i] if row_deg[i] == 1 else b[j]
        if q < -1e-12:
            return None
        flows.append((i, j, max(q, 0.0)))
        a[i] -= q
        b[j] -= q
        remaining.remove(leaf)
    return flows


def emd_oracle(p: TransportProblem) -> float:
    """Ground-truth EMD for small problems, by a solver-independent route.

    An optimal plan sits at a vertex of the transportation polytope, and
    every vertex is supported on a spanning tree of the bipartite graph
    with n + m - 1 cells.  Below the enumeration budget the oracle tries
    every such support exhaustively; above it the value comes from a
    generic LP instead.  Hard cap: 64 cells.
    """
    p.validate()
    n, m = p.cost.shape
    if n * m > 64:
        raise TooLarge(f"oracle accepts at most 64 cells, got {n} x {m} = {n * m}")
    rows = np.flatnonzero(p.supply > 0)
    cols = np.flatnonzero(p.demand > 0)
    cost = p.cost[np.ix_(rows, cols)]
    supply = p.supply[rows]
    demand = p.demand[cols]
    k, l = cost.shape
    if k * l <= _ENUM_CELLS:
        all_cells = list(itertools.product(range(k), range(l)))
        best = math.inf
        for cells in itertools.combinations(all_cells, k + l - 1):
            if len({i for i, _ in cells}) < k or len({j for _, j in cells}) < l:
                continue
            flows = _basis_flows(cells, supply, demand)
            if flows is None:
                continue
            value = sum(q * cost[i, j] for i, j, q in flows)
            if value < best:
                best = value
        assert best < math.inf, "no feasible basis found for a balanced problem"
        return best
    a_eq = np.zeros((k + l, k * l))
    for i in range(k):
        a_eq[i, i * l : (i + 1) * l] = 1.0
    for j in range(l):
        a_eq[k + j, j::l] = 1.0
    b_eq = np.concatenate([supply, demand])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, f"LP route failed: {res.message}"
    return float(res.fun)

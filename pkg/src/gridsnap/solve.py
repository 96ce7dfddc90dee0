"""Exact optimization: embedded branch-and-bound, the lazy row-generation loop,
and an enumeration oracle.

The branch-and-bound works on vertex positions only. Once every vertex of a
constraint family is placed, the family's binaries are feasible or not by a
closed-form test; those tests mirror the rows in :mod:`gridsnap.model` and are
cross-checked against them in the test suite.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import (GridPoint, GridSnapError, Instance, ObjectiveKind, Solution, SolveStats, cost,
                   position_vector)
from .geometry import DirectionSet, dot, primitive, rotate_cw
from .model import (COINCIDENCE, CYCLIC, POINT_SEPARATION, SEPARATION, Model, build_full_model)
from .topology import check

log = logging.getLogger(__name__)


class BudgetExceeded(GridSnapError):
    pass


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class SolveConfig:
    node_budget: int = 10 ** 7
    max_iterations: int = 1000
    # prove or refute "a solution of cost <= cost_cap exists" instead of optimizing past it
    cost_cap: Optional[Fraction] = None
    canonical: bool = True
    time_limit: Optional[float] = None


@dataclass
class SolveResult:
    status: Status
    solution: Optional[Solution] = None
    stats: SolveStats = field(default_factory=SolveStats)
    trace: List[Fraction] = field(default_factory=list)
    capped: bool = False
    # the row families the result was solved against (for LP export)
    model: Optional[Model] = None

    @property
    def cost(self) -> Optional[Fraction]:
        return None if self.solution is None else self.solution.objective_value

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solver_threads() -> int:
    """Worker cap from GRIDSNAP_THREADS; the embedded search itself is sequential."""
    raw = os.environ.get("GRIDSNAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


# -- closed-form family tests -------------------------------------------------------

def separated(dirs: DirectionSet, side1: Sequence[GridPoint], side2: Sequence[GridPoint]) -> bool:
    """Some D in dirs has D.(p - q) > 0 for every p in side1, q in side2.

    For integer points this is exactly "the separation rows admit a gamma":
    the scaled row asks D.(p - q) >= D_min with 0 < D_min <= 1.
    """
    # shortcut: bounding boxes apart along an axis, and the axis direction is in the set
    xs1, ys1 = [p[0] for p in side1], [p[1] for p in side1]
    xs2, ys2 = [q[0] for q in side2], [q[1] for q in side2]
    index = dirs.index
    if ((min(xs1) > max(xs2) and (1, 0) in index) or (max(xs1) < min(xs2) and (-1, 0) in index)
            or (min(ys1) > max(ys2) and (0, 1) in index)
            or (max(ys1) < min(ys2) and (0, -1) in index)):
        return True
    diffs = [(p[0] - q[0], p[1] - q[1]) for p in side1 for q in side2]
    if any(d == (0, 0) for d in diffs):
        return False
    # the admissible directions form one open arc starting right after some
    # diff rotated by -90 degrees; test the first direction past each start
    for d in diffs:
        cand = dirs.first_after(rotate_cw(d))
        if all(dot(cand, e) > 0 for e in diffs):
            return True
    return False


def cyclic_ok(dirs: DirectionSet, center: GridPoint, ordered: Sequence[GridPoint]) -> bool:
    """Direction indices along the reference order rise everywhere but once."""
    idx = []
    for p in ordered:
        dx, dy = p[0] - center[0], p[1] - center[1]
        if dx == 0 and dy == 0:
            return False
        idx.append(dirs.index[primitive(dx, dy)])
    k = len(idx)
    drops = sum(1 for i in range(k) if idx[(i + 1) % k] <= idx[i])
    return drops <= 1


class _Req:
    __slots__ = ("kind", "verts", "data")

    def __init__(self, kind, verts, data=None):
        self.kind = kind
        self.verts = verts
        self.data = data


class _Search:
    def __init__(self, model: Model, config: SolveConfig):
        self.model = model
        self.config = config
        inst = model.instance
        self.obj = inst.objective
        self.sum_mode = self.obj.combine == "sum"
        self.verts = sorted(inst.drawing.positions)
        self.targets = inst.drawing.positions
        self.box = inst.box
        self.dirs = model.dirs
        self.coinc: Dict[str, set] = {v: set() for v in self.verts}
        self.reqs: List[_Req] = []
        for f in model.families:
            kind, objs = f
            if kind == COINCIDENCE:
                self.coinc[objs[0]].add(objs[1])
                self.coinc[objs[1]].add(objs[0])
            elif kind == SEPARATION:
                e1, e2 = objs
                self.reqs.append(_Req(SEPARATION, tuple(e1) + tuple(e2), (e1, e2)))
            elif kind == POINT_SEPARATION:
                v, e = objs
                self.reqs.append(_Req(SEPARATION, (v,) + tuple(e), ((v,), e)))
            elif kind == CYCLIC:
                v = objs[0]
                order = model.reference_order[v]
                self.reqs.append(_Req(CYCLIC, (v,) + tuple(order), (v, tuple(order))))
        self.req_of: Dict[str, List[_Req]] = {v: [] for v in self.verts}
        for r in self.reqs:
            for v in set(r.verts):
                self.req_of[v].append(r)
        self.nodes = 0
        self.started = time.monotonic()
        self._mins: Dict[str, Fraction] = {}
        self._dom_cache: Dict[Optional[Fraction], tuple] = {}
        self._sep_cache: Dict[tuple, bool] = {}

    # -- costs & domains --
    def vcost(self, v, p) -> Fraction:
        return self.obj.vertex_cost(self.targets[v], p)

    def min_cost(self, v) -> Fraction:
        if v not in self._mins:
            # costs grow with |dx| and |dy|, so the floor/ceil candidates suffice
            X, Y = self.targets[v]
            xs = {min(max(math.floor(X), 0), self.box.x_max), min(max(math.ceil(X), 0), self.box.x_max)}
            ys = {min(max(math.floor(Y), 0), self.box.y_max), min(max(math.ceil(Y), 0), self.box.y_max)}
            if self.obj.kind == ObjectiveKind.MIN_HEIGHT:
                ys = {0}
            self._mins[v] = min(self.vcost(v, (x, y)) for x in xs for y in ys)
        return self._mins[v]

    def _window(self, v, bound):
        """Grid points that may cost at most ``bound`` for v (all if None)."""
        box = self.box
        if bound is None or self.obj.kind == ObjectiveKind.MIN_HEIGHT:
            ys = range(box.y_max + 1)
            if bound is not None:
                ys = range(min(box.y_max, math.floor(bound)) + 1)
            return [(x, y) for x in range(box.x_max + 1) for y in ys]
        r = math.floor(bound) if not self.obj.squared else math.isqrt(math.floor(bound))
        X, Y = self.targets[v]
        x0, x1 = max(0, math.floor(X) - r), min(box.x_max, math.ceil(X) + r)
        y0, y1 = max(0, math.floor(Y) - r), min(box.y_max, math.ceil(Y) + r)
        return [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]

    def build_domains(self, cap: Optional[Fraction]):
        if cap not in self._dom_cache:
            self._dom_cache[cap] = self._build_domains(cap)
        doms, self.cost_of = self._dom_cache[cap]
        return {v: list(d) for v, d in doms.items()}

    def _build_domains(self, cap: Optional[Fraction]):
        mins = {v: self.min_cost(v) for v in self.verts}
        if cap is None:
            limit = {v: None for v in self.verts}
        elif self.sum_mode:
            slack = cap - sum(mins.values(), Fraction(0))
            limit = {v: mins[v] + slack for v in self.verts}
        else:
            limit = {v: cap for v in self.verts}
        cost_of: Dict[str, Dict[GridPoint, Fraction]] = {}
        doms = {}
        for v in self.verts:
            pts = self._window(v, limit[v])
            cs = {p: self.vcost(v, p) for p in pts}
            if limit[v] is not None:
                cs = {p: c for p, c in cs.items() if c <= limit[v]}
            cost_of[v] = cs
            doms[v] = sorted(cs, key=lambda p: (cs[p], p))
        return doms, cost_of

    # -- requirement tests --
    def req_holds(self, r: _Req, pos) -> bool:
        if r.kind == SEPARATION:
            s1, s2 = r.data
            key = (tuple(pos[a] for a in s1), tuple(pos[b] for b in s2))
            hit = self._sep_cache.get(key)
            if hit is None:
                if len(self._sep_cache) > 1_000_000:
                    self._sep_cache.clear()
                hit = self._sep_cache[key] = separated(self.dirs, key[0], key[1])
            return hit
        v, order = r.data
        return cyclic_ok(self.dirs, pos[v], [pos[w] for w in order])

    # -- search --
    def run(self, cap: Optional[Fraction], incumbent=None, stop_at_first=False, restrict=None):
        """Depth-first branch-and-bound; returns (best_cost, best_positions, complete).

        ``restrict`` maps vertices to the only values they may take.
        """
        doms = self.build_domains(cap)
        for v, allowed in (restrict or {}).items():
            doms[v] = [p for p in doms[v] if p in allowed]
        self.best_cost = incumbent
        self.best_pos: Optional[Dict[str, GridPoint]] = None
        self.cap = cap
        self.stop_at_first = stop_at_first
        self.doms = doms
        self.pos: Dict[str, GridPoint] = {}
        self.fixed_total = Fraction(0)
        self.exhausted = False
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * len(self.verts) + 1000))
        try:
            if all(doms[v] for v in self.verts):
                self._dfs()
        except _Stop:
            pass
        finally:
            sys.setrecursionlimit(limit)
        return self.best_cost, self.best_pos, not self.exhausted

    def _dom_min(self, v):
        return self.cost_of[v][self.doms[v][0]]

    def _lower_bound(self, free):
        mins = [self._dom_min(v) for v in free]
        if self.sum_mode:
            return self.fixed_total + sum(mins, Fraction(0)), mins
        fixed = self.fixed_total
        return max([fixed] + mins), mins

    def _budget_check(self):
        self.nodes += 1
        if self.nodes > self.config.node_budget:
            self.exhausted = True
            raise _Stop()
        if self.config.time_limit is not None and self.nodes % 1024 == 0:
            if time.monotonic() - self.started > self.config.time_limit:
                self.exhausted = True
                raise _Stop()

    def _prunes(self, bound) -> bool:
        if self.cap is not None and bound > self.cap:
            return True
        return self.best_cost is not None and bound >= self.best_cost

    def _dfs(self):
        self._budget_check()
        free = [v for v in self.verts if v not in self.pos]
        if not free:
            total = self.fixed_total
            if self.best_cost is None or total < self.best_cost:
                self.best_cost = total
                self.best_pos = dict(self.pos)
                log.debug("incumbent cost=%s nodes=%d", total, self.nodes)
                if self.stop_at_first:
                    raise _Stop()
            return
        bound, mins = self._lower_bound(free)
        if self._prunes(bound):
            return
        v = free[min(range(len(free)), key=lambda i: (len(self.doms[free[i]]), -mins[i], free[i]))]
        vmin = self._dom_min(v)
        for p in list(self.doms[v]):
            c = self.cost_of[v][p]
            if self.sum_mode:
                child_bound = bound - vmin + c
            else:
                child_bound = max(bound, c)
            if self._prunes(child_bound):
                break
            self._assign(v, p, c)

    def _assign(self, v, p, c):
        trail = []
        ok = True
        self.pos[v] = p
        prev_total = self.fixed_total
        self.fixed_total = prev_total + c if self.sum_mode else max(prev_total, c)
        for w in self.coinc[v]:
            if w in self.pos:
                continue
            d = self.doms[w]
            if p in d:
                trail.append((w, d))
                nd = [q for q in d if q != p]
                self.doms[w] = nd
                if not nd:
                    ok = False
                    break
        if ok:
            for r in self.req_of[v]:
                missing = [u for u in r.verts if u not in self.pos]
                if not missing:
                    if not self.req_holds(r, self.pos):
                        ok = False
                        break
                    continue
                u = missing[0]
                if any(m != u for m in missing):
                    continue
                d = self.doms[u]
                keep = []
                for q in d:
                    self.pos[u] = q
                    if self.req_holds(r, self.pos):
                        keep.append(q)
                del self.pos[u]
                if len(keep) != len(d):
                    trail.append((u, d))
                    self.doms[u] = keep
                    if not keep:
                        ok = False
                        break
        if ok:
            self._dfs()
        for w, d in reversed(trail):
            self.doms[w] = d
        del self.pos[v]
        self.fixed_total = prev_total


class _Stop(Exception):
    pass


def _stats(search: Optional[_Search], **kw) -> SolveStats:
    return SolveStats(nodes_explored=0 if search is None else search.nodes, **kw)


def _root_bound(search: _Search) -> Fraction:
    mins = [search.min_cost(v) for v in search.verts]
    if not mins:
        return Fraction(0)
    if search.sum_mode:
        return sum(mins, Fraction(0))
    bound = max(mins)
    if search.obj.kind == ObjectiveKind.MIN_HEIGHT:
        # pigeonhole: n distinct points need ceil(n / (x_max + 1)) rows
        rows = -(-len(search.verts) // (search.box.x_max + 1))
        bound = max(bound, Fraction(rows - 1))
    return bound


def _bottleneck_ladder(search: _Search, root: Fraction, cap: Optional[Fraction]) -> List[Fraction]:
    values = set()
    for v in search.verts:
        values.update(search.vcost(v, p) for p in search.box.points())
    return sorted(c for c in values if c >= root and (cap is None or c <= cap))


def _canonical(search: _Search, best_cost: Fraction, best_pos) -> Optional[Dict[str, GridPoint]]:
    """Lexicographically smallest optimal placement (by sorted vertex id).

    Vertices are fixed in id order; for each, only values below the current
    witness need a feasibility search, since the witness itself proves its own
    value is still reachable. Returns None if the budget runs out.
    """
    current = dict(best_pos)
    fixed: Dict[str, set] = {}
    doms = search.build_domains(best_cost)
    for v in search.verts:
        for p in sorted(q for q in doms[v] if q < current[v]):
            _, found, done = search.run(best_cost, stop_at_first=True,
                                        restrict={**fixed, v: {p}})
            if not done:
                return None
            if found is not None:
                current = found
                break
        fixed[v] = {current[v]}
    return current


def solve_exact(model: Model, config: Optional[SolveConfig] = None) -> SolveResult:
    """Provably optimal placement for the model's families, or Infeasible.

    With ``config.cost_cap`` the search only looks for solutions of cost at
    most the cap; an Infeasible result then proves the optimum exceeds it.
    """
    config = config or SolveConfig()
    search = _Search(model, config)
    inst = model.instance
    if not search.verts:
        sol = Solution({}, Fraction(0), SolveStats())
        return SolveResult(Status.OPTIMAL, sol)
    root = _root_bound(search)
    cap = config.cost_cap
    best_cost, best_pos = None, None
    if not search.sum_mode:
        # bottleneck objectives: the optimum is one of finitely many vertex costs,
        # so test them in increasing order; the first feasible one is optimal
        for level in _bottleneck_ladder(search, root, cap):
            best_cost, best_pos, done = search.run(level, stop_at_first=True)
            if not done:
                return SolveResult(Status.ITERATION_LIMIT, None, _stats(search), capped=cap is not None)
            if best_pos is not None:
                break
    elif cap is None or root <= cap:
        # a placement meeting the root bound is optimal the moment it is found
        best_cost, best_pos, done = search.run(root, stop_at_first=True)
        if not done:
            return SolveResult(Status.ITERATION_LIMIT, None, _stats(search), capped=cap is not None)
    if best_pos is None and search.sum_mode and (cap is None or cap > root):
        best_cost, best_pos, done = search.run(cap)
        if not done:
            sol = None
            if best_pos is not None:
                sol = Solution(best_pos, best_cost, _stats(search))
            return SolveResult(Status.ITERATION_LIMIT, sol, _stats(search), capped=cap is not None)
    if best_pos is None:
        log.info("infeasible nodes=%d", search.nodes)
        return SolveResult(Status.INFEASIBLE, None, _stats(search), capped=cap is not None)
    if config.canonical:
        canon = _canonical(search, best_cost, best_pos)
        if canon is None:
            # optimal cost is proven, but not which optimum is canonical
            return SolveResult(Status.ITERATION_LIMIT, Solution(best_pos, best_cost, _stats(search)),
                               _stats(search), capped=cap is not None)
        best_pos = canon
    value = cost(inst, best_pos)
    assert value == best_cost, (value, best_cost)
    log.info("optimal cost=%s nodes=%d", value, search.nodes)
    return SolveResult(Status.OPTIMAL, Solution(dict(sorted(best_pos.items())), value, _stats(search)),
                       _stats(search), capped=cap is not None)


def _assert_safe(instance: Instance, res: SolveResult) -> None:
    if res.status is Status.OPTIMAL:
        viols = check(instance.drawing, res.solution.positions)
        if viols:
            raise AssertionError(f"optimal solution violates topology: {viols[:3]}")


def snap_full(instance: Instance, config: Optional[SolveConfig] = None,
              dirs: Optional[DirectionSet] = None) -> SolveResult:
    model = build_full_model(instance, dirs)
    res = solve_exact(model, config)
    _assert_safe(instance, res)
    res.stats = SolveStats(lazy_iterations=1, constraints_added=model.num_topology_rows(),
                           nodes_explored=res.stats.nodes_explored)
    if res.solution is not None:
        res.solution = Solution(res.solution.positions, res.solution.objective_value, res.stats)
    res.trace = [] if res.cost is None else [res.cost]
    res.model = model
    return res


def snap_lazy(instance: Instance, config: Optional[SolveConfig] = None,
              dirs: Optional[DirectionSet] = None) -> SolveResult:
    """Delayed constraint generation: solve, check, add violated families, repeat."""
    config = config or SolveConfig()
    model = Model(instance, dirs)
    added = 0
    nodes = 0
    trace: List[Fraction] = []
    res = None
    for it in range(1, config.max_iterations + 1):
        res = solve_exact(model, config)
        res.model = model
        nodes += res.stats.nodes_explored
        stats = SolveStats(lazy_iterations=it, constraints_added=added, nodes_explored=nodes)
        if res.status is not Status.OPTIMAL:
            res.stats = stats
            res.trace = trace
            return res
        trace.append(res.cost)
        viols = check(instance.drawing, res.solution.positions)
        log.info("lazy iteration=%d cost=%s violations=%d rows=%d", it, res.cost, len(viols), added)
        if not viols:
            res.stats = stats
            res.solution = Solution(res.solution.positions, res.solution.objective_value, stats)
            res.trace = trace
            return res
        new_rows = 0
        for viol in viols:
            for fam in model.families_for_violation(viol):
                new_rows += model.add(fam)
        if new_rows == 0:
            raise AssertionError(f"violations {viols[:3]} map to no new constraint family")
        added += new_rows
    stats = SolveStats(lazy_iterations=config.max_iterations, constraints_added=added,
                       nodes_explored=nodes)
    return SolveResult(Status.ITERATION_LIMIT, res.solution if res else None, stats, trace,
                       model=model)


def brute_force(instance: Instance, budget: int = 10 ** 8) -> SolveResult:
    """Enumerate every placement; the cheapest topologically safe one wins.

    Ties go to the lexicographically smallest position vector.
    """
    verts = sorted(instance.drawing.positions)
    points = sorted(instance.box.points())
    n, m = len(verts), len(points)
    total = m ** n
    if total > budget:
        raise BudgetExceeded(f"{total} placements exceed the budget of {budget}")
    if n == 0:
        return SolveResult(Status.OPTIMAL, Solution({}, Fraction(0)))
    obj = instance.objective
    table = [[obj.vertex_cost(instance.drawing.positions[v], p) for p in points] for v in verts]
    den = 1
    for row in table:
        for c in row:
            den = math.lcm(den, c.denominator)
    checked = 0

    def placement(idx) -> Dict[str, GridPoint]:
        return {v: points[i] for v, i in zip(verts, idx)}

    if total <= 2_000_000:
        scaled = [np.array([int(c * den) for c in row], dtype=object if den > 10 ** 6 else np.int64)
                  for row in table]
        acc = scaled[0]
        for row in scaled[1:]:
            acc = (np.add.outer(acc, row) if obj.combine == "sum" else np.maximum.outer(acc, row)).ravel()
        order = np.argsort(acc, kind="stable")
        for flat in order:
            checked += 1
            idx = np.unravel_index(int(flat), (m,) * n)
            pos = placement(idx)
            if not check(instance.drawing, pos):
                sol = Solution(pos, Fraction(int(acc[flat]), den), SolveStats(nodes_explored=checked))
                return SolveResult(Status.OPTIMAL, sol, sol.stats)
        return SolveResult(Status.INFEASIBLE, None, SolveStats(nodes_explored=checked))
    best, best_pos = None, None
    for idx in itertools.product(range(m), repeat=n):
        vals = [table[k][i] for k, i in enumerate(idx)]
        c = sum(vals, Fraction(0)) if obj.combine == "sum" else max(vals)
        if best is not None and c >= best:
            continue
        checked += 1
        pos = placement(idx)
        if not check(instance.drawing, pos):
            best, best_pos = c, pos
    if best_pos is None:
        return SolveResult(Status.INFEASIBLE, None, SolveStats(nodes_explored=checked))
    sol = Solution(best_pos, best, SolveStats(nodes_explored=checked))
    return SolveResult(Status.OPTIMAL, sol, sol.stats)

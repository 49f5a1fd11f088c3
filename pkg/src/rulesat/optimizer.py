"""Search drivers: node-count iteration and model-improving MaxSAT.

minimize_perfect grows the node count one at a time and stops at the
first satisfiable size, which is therefore minimal.  minimize_bounded
starts from a guessed node budget and lets soft unused flags switch
spare nodes off.  minimize_sparse trades misclassifications against a
per-node penalty and re-runs with a larger budget as long as the
optimum exhausts it, stopping once a round leaves a node unused.

maxsat_solve performs a linear SAT-to-UNSAT search: solve, read the
model cost c, then assume "cost <= c - 1" through totalizer outputs
(one totalizer per distinct soft weight, merged by weighted sums) and
repeat until UNSAT; the last model is optimal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from heapq import heappop, heappush
from itertools import product

from .cardinality import build_totalizer
from .dataset import BinDataset
from .encoder import CnfBundle, Scope, build_bounded, build_perfect, build_sparse, lam_to_cost
from .formula import Assignment, Formula
from .model import DecisionSet, decode, verify_perfect
from .solver import SolveBudgetExceeded, Solver

DEFAULT_STEP = 10


class ContradictionError(ValueError):
    """Exact-fit training on contradictory data cannot succeed."""


class OptimizerError(ValueError):
    """Invalid optimizer request."""


@dataclass
class SearchLimits:
    wall_time_budget: float = 600.0  # seconds for the whole search
    per_solve_budget: float = 60.0   # seconds for one solver call
    max_nodes: int = 64

    def validate(self) -> None:
        if self.wall_time_budget <= 0 or self.per_solve_budget <= 0:
            raise OptimizerError("time budgets must be positive")
        if self.max_nodes < 1:
            raise OptimizerError("max_nodes must be >= 1")


@dataclass
class SolveOutcome:
    status: str  # "optimal" | "feasible" | "infeasible" | "timeout"
    decision_set: DecisionSet | None = None
    objective: int | None = None
    stats: dict = field(default_factory=dict)


@dataclass
class MaxsatResult:
    status: str  # "optimal" | "infeasible" | "timeout"
    assignment: Assignment | None = None
    cost: int | None = None
    stats: dict = field(default_factory=dict)


def default_node_budget(num_features: int) -> int:
    return min(2 * (num_features + 2), 32)


class _Clock:
    def __init__(self, limits: SearchLimits):
        self.limits = limits
        self.start = time.monotonic()
        self.wall_deadline = self.start + limits.wall_time_budget

    def solve_deadline(self) -> float:
        return min(time.monotonic() + self.limits.per_solve_budget, self.wall_deadline)

    def expired(self) -> bool:
        return time.monotonic() >= self.wall_deadline

    def elapsed(self) -> float:
        return time.monotonic() - self.start


class _CostCounter:
    """Unary view of the total falsified soft weight.

    One totalizer per distinct weight; their outputs, scaled by the
    weight, are merged into sum-valued literals.  Assuming the negation
    of every literal above a bound excludes all costlier models.
    """

    def __init__(self, solver: Solver, soft):
        by_weight: dict[int, list[int]] = {}
        for clause, weight in soft:
            if len(clause) == 1:
                indicator = -clause[0]
            else:
                relax = solver.new_var()
                solver.add_clause(list(clause) + [relax])
                indicator = relax
            by_weight.setdefault(weight, []).append(indicator)
        nodes = []
        for weight in sorted(by_weight):
            handle = build_totalizer(solver, by_weight[weight])
            nodes.append([(weight * t, handle.outputs[t - 1])
                          for t in range(1, len(handle.outputs) + 1)])
        while len(nodes) > 1:
            merged = []
            for a in range(0, len(nodes) - 1, 2):
                merged.append(self._merge(solver, nodes[a], nodes[a + 1]))
            if len(nodes) % 2:
                merged.append(nodes[-1])
            nodes = merged
        self.levels = nodes[0]  # ascending (weighted count, literal)

    @staticmethod
    def _merge(solver: Solver, left, right):
        sums: dict[int, int] = {}
        for value, _ in left:
            sums.setdefault(value, 0)
        for value, _ in right:
            sums.setdefault(value, 0)
        for lv, _ in left:
            for rv, _ in right:
                sums.setdefault(lv + rv, 0)
        for value in sums:
            sums[value] = solver.new_var()
        lit_of = dict(left)
        lit_of.update({0: None})
        rlit = dict(right)
        rlit[0] = None
        for lv, llit in list(lit_of.items()):
            for rv, rl in rlit.items():
                value = lv + rv
                if value == 0:
                    continue
                clause = [sums[value]]
                if llit is not None:
                    clause.append(-llit)
                if rl is not None:
                    clause.append(-rl)
                solver.add_clause(clause)
        return sorted(sums.items())

    def bound_assumptions(self, bound: int) -> list[int]:
        """Assumptions forcing total falsified weight <= bound."""
        return [-lit for value, lit in self.levels if value > bound]


def _model_cost(soft, assignment) -> int:
    return sum(w for clause, w in soft
               if not any(assignment.lit_true(l) for l in clause))


def maxsat_solve(problem, limits: SearchLimits | None = None, progress=None) -> MaxsatResult:
    """Minimize the falsified soft weight of a formula's hard+soft clauses.

    Accepts a Formula or a CnfBundle.  The result carries the optimal
    assignment and its cost, or infeasible (hard clauses UNSAT), or
    timeout with the best model found so far.
    """
    formula: Formula = problem.formula if isinstance(problem, CnfBundle) else problem
    if not formula.soft:
        raise OptimizerError("maxsat_solve needs at least one soft clause")
    limits = limits or SearchLimits()
    limits.validate()
    clock = _Clock(limits)
    solver = Solver()
    solver.add_formula(formula)
    counter = _CostCounter(solver, formula.soft)
    best_assignment = None
    best_cost = None
    models = 0
    try:
        while True:
            if best_cost is None:
                assumptions = []
            else:
                assumptions = counter.bound_assumptions(best_cost - 1)
            if clock.expired():
                raise SolveBudgetExceeded
            sat = solver.solve(assumptions=assumptions, deadline=clock.solve_deadline())
            if not sat:
                break
            models += 1
            cost = _model_cost(formula.soft, solver.model)
            assert best_cost is None or cost < best_cost
            best_assignment, best_cost = solver.model, cost
            if progress is not None:
                progress({"event": "model", "cost": cost, "elapsed": clock.elapsed()})
            if cost == 0:
                break
    except SolveBudgetExceeded:
        return MaxsatResult(
            status="timeout",
            assignment=best_assignment,
            cost=best_cost,
            stats={"solve_calls": solver.solve_calls, "conflicts": solver.conflicts,
                   "elapsed": clock.elapsed(), "models": models},
        )
    stats = {"solve_calls": solver.solve_calls, "conflicts": solver.conflicts,
             "elapsed": clock.elapsed(), "models": models}
    if best_assignment is None:
        return MaxsatResult(status="infeasible", stats=stats)
    return MaxsatResult(status="optimal", assignment=best_assignment, cost=best_cost,
                        stats=stats)


def _check_consistent(ds: BinDataset) -> None:
    seen: dict[tuple[int, ...], int] = {}
    for bits, cls, _ in ds.examples:
        if seen.setdefault(bits, cls) != cls:
            raise ContradictionError(
                "identical feature vectors carry different classes; "
                "run sanitize() in perfect mode or train a sparse model"
            )


def minimize_perfect(ds: BinDataset, scope: Scope, limits: SearchLimits | None = None,
                     progress=None) -> SolveOutcome:
    """Smallest exact-fit decision set by trying node counts 1, 2, 3, ...

    Sizes below the answer are proven UNSAT along the way, so the first
    satisfiable size is the minimum; no binary search is attempted since
    the UNSAT proofs at n-1 are the expensive part and would be repeated.
    """
    scope.validate(len(ds.classes))
    _check_consistent(ds)
    limits = limits or SearchLimits()
    limits.validate()
    clock = _Clock(limits)
    rounds = []
    solve_calls = conflicts = 0
    for n in range(1, limits.max_nodes + 1):
        bundle = build_perfect(ds, n, scope)
        solver = Solver()
        solver.add_formula(bundle.formula)
        timed_out = clock.expired()
        sat = False
        if not timed_out:
            try:
                sat = solver.solve(deadline=clock.solve_deadline())
            except SolveBudgetExceeded:
                timed_out = True
        solve_calls += solver.solve_calls
        conflicts += solver.conflicts
        record = {"n": n, "status": "sat" if sat else ("timeout" if timed_out else "unsat"),
                  "cost": n if sat else None, "elapsed": clock.elapsed()}
        rounds.append(record)
        if progress is not None:
            progress(record)
        stats = {"solve_calls": solve_calls, "conflicts": conflicts,
                 "elapsed": clock.elapsed(), "rounds": rounds}
        if timed_out:
            return SolveOutcome(status="timeout", stats=stats)
        if sat:
            dset = decode(solver.model, bundle.varmap, scope, ds.classes)
            ok, violation = verify_perfect(dset, ds, scope)
            if not ok:
                raise AssertionError("decoded set fails verification: %r" % (violation,))
            dset.metadata = {"mode": "perfect", "scope": scope.kind, "objective": n}
            return SolveOutcome(status="optimal", decision_set=dset, objective=n, stats=stats)
    return SolveOutcome(
        status="timeout",
        stats={"solve_calls": solve_calls, "conflicts": conflicts, "elapsed": clock.elapsed(),
               "rounds": rounds, "note": "node cap %d reached" % limits.max_nodes},
    )


def _remaining_limits(clock: _Clock, limits: SearchLimits) -> SearchLimits:
    remaining = max(clock.wall_deadline - time.monotonic(), 0.001)
    return SearchLimits(wall_time_budget=remaining,
                        per_solve_budget=limits.per_solve_budget,
                        max_nodes=limits.max_nodes)


def minimize_bounded(ds: BinDataset, scope: Scope, n0: int | None = None,
                     step: int = DEFAULT_STEP, limits: SearchLimits | None = None,
                     progress=None) -> SolveOutcome:
    """Exact fit within a node budget, minimizing the used-node count.

    When the budget is too small the hard clauses are UNSAT and the
    search retries with n0 + step.  On success the objective equals the
    perfect optimum whenever the budget reached it.
    """
    scope.validate(len(ds.classes))
    _check_consistent(ds)
    limits = limits or SearchLimits()
    limits.validate()
    if step < 1:
        raise OptimizerError("step must be >= 1")
    clock = _Clock(limits)
    n = n0 if n0 is not None else default_node_budget(ds.num_features)
    if n < 1:
        raise OptimizerError("node budget must be >= 1")
    rounds = []
    solve_calls = conflicts = 0
    while n <= limits.max_nodes:
        bundle = build_bounded(ds, n, scope)
        res = maxsat_solve(bundle, _remaining_limits(clock, limits))
        solve_calls += res.stats.get("solve_calls", 0)
        conflicts += res.stats.get("conflicts", 0)
        record = {"n": n, "status": res.status, "cost": res.cost, "elapsed": clock.elapsed()}
        rounds.append(record)
        if progress is not None:
            progress(record)
        stats = {"solve_calls": solve_calls, "conflicts": conflicts,
                 "elapsed": clock.elapsed(), "rounds": rounds}
        if res.status == "infeasible":
            n += step
            continue
        if res.assignment is None:
            return SolveOutcome(status="timeout", stats=stats)
        # soft clauses are one unit per node, so the model cost is the
        # used-node count even if decoding merges duplicate body literals
        dset = decode(res.assignment, bundle.varmap, scope, ds.classes)
        used = res.cost
        dset.metadata = {"mode": "bounded", "scope": scope.kind, "objective": used}
        if res.status == "timeout":
            return SolveOutcome(status="feasible", decision_set=dset, objective=used,
                                stats=stats)
        ok, violation = verify_perfect(dset, ds, scope)
        if not ok:
            raise AssertionError("decoded set fails verification: %r" % (violation,))
        return SolveOutcome(status="optimal", decision_set=dset, objective=used, stats=stats)
    return SolveOutcome(
        status="timeout",
        stats={"solve_calls": solve_calls, "conflicts": conflicts, "elapsed": clock.elapsed(),
               "rounds": rounds, "note": "node cap %d reached" % limits.max_nodes},
    )


def minimize_sparse(ds: BinDataset, scope: Scope, lam, n0: int | None = None,
                    step: int = DEFAULT_STEP, limits: SearchLimits | None = None,
                    progress=None) -> SolveOutcome:
    """Minimize misclassification weight plus lambda-scaled node count.

    The hard clauses are always satisfiable (flag everything as
    misclassified, use no node), so the budget only caps the searchable
    size.  A round whose optimum uses every node may be budget-starved;
    the search then retries with a larger budget, stopping once a
    round's optimum leaves at least one node unused.
    """
    scope.validate(len(ds.classes))
    limits = limits or SearchLimits()
    limits.validate()
    if step < 1:
        raise OptimizerError("step must be >= 1")
    lam_cost = lam_to_cost(lam, ds.total_weight)
    clock = _Clock(limits)
    n = n0 if n0 is not None else default_node_budget(ds.num_features)
    if n < 1:
        raise OptimizerError("node budget must be >= 1")
    best: SolveOutcome | None = None
    rounds = []
    solve_calls = conflicts = 0
    while n <= limits.max_nodes:
        bundle = build_sparse(ds, n, lam_cost, scope)
        res = maxsat_solve(bundle, _remaining_limits(clock, limits))
        solve_calls += res.stats.get("solve_calls", 0)
        conflicts += res.stats.get("conflicts", 0)
        record = {"n": n, "status": res.status, "cost": res.cost, "elapsed": clock.elapsed()}
        rounds.append(record)
        if progress is not None:
            progress(record)
        stats = {"solve_calls": solve_calls, "conflicts": conflicts,
                 "elapsed": clock.elapsed(), "rounds": rounds}
        outcome = None
        if res.assignment is not None:
            vm = bundle.varmap
            used_nodes = sum(1 for j in range(1, n + 1)
                             if not res.assignment.value(vm.unused_var(j)))
            misclassified = sum(
                w for i, (_, _, w) in enumerate(ds.examples, start=1)
                if res.assignment.value(vm.misclass_var(i))
            )
            dset = decode(res.assignment, vm, scope, ds.classes)
            dset.metadata = {
                "mode": "sparse", "scope": scope.kind, "lambda_cost": lam_cost,
                "objective": res.cost, "misclassified_weight": misclassified,
            }
            outcome = SolveOutcome(status="feasible", decision_set=dset,
                                   objective=res.cost, stats=stats)
            if best is None or outcome.objective < best.objective:
                best = outcome
        if res.status == "timeout":
            if best is not None:
                best.stats = stats
                return best
            return SolveOutcome(status="timeout", stats=stats)
        # growing the budget never raises the optimum, so once a round's
        # optimum leaves a node unused the enlarging loop is done
        if res.status == "optimal" and used_nodes < n:
            outcome.status = "optimal"
            return outcome
        n += step
    if best is not None:
        return best
    return SolveOutcome(
        status="timeout",
        stats={"solve_calls": solve_calls, "conflicts": conflicts, "elapsed": clock.elapsed(),
               "rounds": rounds, "note": "node cap %d reached" % limits.max_nodes},
    )


def oracle_min_size(ds: BinDataset, scope: Scope, cap: int) -> int | None:
    """Exhaustive reference search for the minimal exact-fit size.

    Enumerates every rule shape (each feature positive, negated, or
    absent, plus a head) directly against the validity semantics, then
    takes a cheapest cover of the scope-relevant examples.  Exponential
    in the feature count: limited to 8 examples and 4 features.
    """
    scope.validate(len(ds.classes))
    if ds.num_examples < 1:
        raise OptimizerError("oracle needs at least one example")
    if ds.num_examples > 8 or ds.num_features > 4:
        raise OptimizerError("oracle is limited to 8 examples and 4 features")
    if cap < 1:
        raise OptimizerError("cap must be >= 1")
    _check_consistent(ds)
    m, k = ds.num_examples, ds.num_features
    if scope.is_aggregated:
        bits = [cls for _, cls, _ in ds.examples]
        heads = (0, 1)
    else:
        bits = [1 if cls == scope.target else 0 for _, cls, _ in ds.examples]
        heads = (1,)
    required = 0
    for i, b in enumerate(bits):
        if not scope.is_aggregated and b != 1:
            continue
        if scope.is_aggregated or b == 1:
            required |= 1 << i
    candidates: dict[int, int] = {}  # cover mask -> min cost

    def offer(cover: int, cost: int) -> None:
        old = candidates.get(cover)
        if old is None or cost < old:
            candidates[cover] = cost

    for shape in product((None, 1, 0), repeat=k):
        size = sum(1 for s in shape if s is not None) + 1
        match = 0
        for i, (vec, _, _) in enumerate(ds.examples):
            if all(s is None or vec[f] == s for f, s in enumerate(shape)):
                match |= 1 << i
        for head in heads:
            head_bit = head if scope.is_aggregated else 1
            ok = True
            for i in range(m):
                if match >> i & 1 and bits[i] != head_bit:
                    ok = False
                    break
            if ok:
                offer(match & required, size)
    if k >= 1:
        offer(0, 3)  # contradictory body, covers nothing, always admissible
    if not candidates:
        return None  # no rule avoids wrong coverage, no sequence is valid
    if required == 0:
        answer = min(candidates.values())
        return answer if answer <= cap else None
    dist = {0: 0}
    heap = [(0, 0)]
    while heap:
        d, mask = heappop(heap)
        if mask == required:
            return d if d <= cap else None
        if d > dist.get(mask, 1 << 30) or d >= cap:
            continue
        for cover, cost in candidates.items():
            nxt = mask | cover
            nd = d + cost
            if nxt != mask and nd < dist.get(nxt, 1 << 30) and nd <= cap:
                dist[nxt] = nd
                heappush(heap, (nd, nxt))
    return None

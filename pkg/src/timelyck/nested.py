"""Nested-knowledge characterisation of timely common knowledge.

A path is a non-stuttering agent sequence whose consecutive pairs carry finite
timing bounds.  Each path denotes a nested formula

    knows(i1, shift(knows(i2, shift(... knows(in, psi) ...))))

with the exact shift of delta(i_m, i_m+1) between levels.  Intersecting these
formulae over all paths from an agent reconstructs that agent's coordinate of
the exact-shift fixed point `timely_ck_g`, and the depth-n partial
intersection tracks the n-th descending iterate of the exact-shift map: that
identity is asserted at every depth and is the independent check this module
provides on the fixed-point engine.

Two evaluation modes: the default folds shared path suffixes (per-depth work
linear in the agent count squared), while the explicit mode evaluates every
path separately and is kept, behind a flag, as the genuinely redundant route
for small depths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InternalConsistencyError, InvariantViolation, SizeGuardExceeded
from .events import Event, eventually, knows, shift_exact
from .fixpoint import (
    EventTuple,
    TimingSpec,
    apply_g,
    timely_ck,
    timely_ck_g,
    tuple_leq,
)
from .universe import is_finite_delta

DeltaPath = tuple  # of agent ids


def validate_path(spec: TimingSpec, path) -> DeltaPath:
    path = tuple(path)
    if not path:
        raise InvariantViolation("a path needs at least one agent")
    for agent in path:
        if agent not in spec.agents:
            raise InvariantViolation(f"path agent {agent!r} is not in the timing spec")
    for a, b in zip(path, path[1:]):
        if a == b:
            raise InvariantViolation("paths may not stutter")
        if not is_finite_delta(spec.delta(a, b)):
            raise InvariantViolation(
                f"path uses the unbounded pair ({a!r}, {b!r})"
            )
    return path


def finite_successors(spec: TimingSpec, agent: str) -> list[str]:
    return [j for j in spec.agents if j != agent and is_finite_delta(spec.delta(agent, j))]


def paths_are_finite(spec: TimingSpec) -> bool:
    """Whether the finite-bound graph is acyclic, making the path set finite."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {a: WHITE for a in spec.agents}

    def visit(node) -> bool:  # True iff a cycle is reachable
        color[node] = GRAY
        for nxt in finite_successors(spec, node):
            if color[nxt] == GRAY:
                return True
            if color[nxt] == WHITE and visit(nxt):
                return True
        color[node] = BLACK
        return False

    return not any(visit(a) for a in spec.agents if color[a] == WHITE)


def enumerate_paths(spec: TimingSpec, start: str, max_len: int) -> list[DeltaPath]:
    """All finite-bound paths from `start` up to `max_len`, shortest first and
    lexicographic (in spec agent order) within each length."""
    if start not in spec.agents:
        raise InvariantViolation(f"start agent {start!r} is not in the timing spec")
    if max_len < 1:
        raise InvariantViolation("max_len must be positive")
    order = {a: k for k, a in enumerate(spec.agents)}
    out: list[DeltaPath] = []
    frontier = [(start,)]
    for _ in range(max_len):
        out.extend(frontier)
        nxt = []
        for path in frontier:
            for succ in sorted(finite_successors(spec, path[-1]), key=order.get):
                nxt.append(path + (succ,))
        frontier = nxt
        if not frontier:
            break
    return out


def nested_formula(path, psi: Event, spec: TimingSpec) -> Event:
    """Evaluate the path's nested formula right to left."""
    path = validate_path(spec, path)
    value = knows(path[-1], psi)
    for m in range(len(path) - 2, -1, -1):
        value = knows(path[m], shift_exact(value, spec.delta(path[m], path[m + 1])))
    return value


@dataclass
class NestedEvaluation:
    coords: dict  # agent -> Event, the stabilized conjunction
    depths: int
    per_depth_sizes: list = field(default_factory=list)


def _folded_evaluation(psi: Event, spec: TimingSpec) -> NestedEvaluation:
    """Shared-suffix evaluation; cross-checked against the exact-shift iterates.

    Folding shared suffixes makes the depth-m value of the whole path family
    exactly one application of the exact-shift map to the depth-(m-1) values,
    so each depth is compared against an independently iterated `apply_g`.
    """
    u = psi.universe
    cur = {j: Event.full(u) for j in spec.agents}
    iterate = EventTuple.top(u, spec.agents)
    sizes = []
    bound = u.n_points * len(spec.agents) + 2
    for depth in range(1, bound + 1):
        nxt = {}
        for j in spec.agents:
            body = psi
            for k in finite_successors(spec, j):
                body = body & shift_exact(cur[k], spec.delta(j, k))
            nxt[j] = knows(j, body)
        iterate = apply_g(psi, spec, iterate)
        if any(nxt[j] != iterate[j] for j in spec.agents):
            raise InternalConsistencyError(
                "folded path evaluation diverged from the exact-shift iterates"
            )
        sizes.append({j: nxt[j].size for j in spec.agents})
        if nxt == cur:
            return NestedEvaluation(nxt, depth, sizes)
        cur = nxt
    raise InternalConsistencyError("folded path evaluation failed to stabilize")


def _explicit_evaluation(
    start: str, psi: Event, spec: TimingSpec, max_paths: int
) -> Event:
    """Literal per-path evaluation of the running conjunction from `start`.

    The running value after depth n is wedged between consecutive exact-shift
    iterates, and must land exactly on the fixed point one depth after the
    iterates stabilize; both facts are asserted.
    """
    u = psi.universe
    g_prev = EventTuple.top(u, spec.agents)
    running = Event.full(u)
    frontier = [(start,)]
    order = {a: k for k, a in enumerate(spec.agents)}
    total = 0
    bound = u.n_points * len(spec.agents) + 2
    for depth in range(1, bound + 1):
        total += len(frontier)
        if total > max_paths:
            raise SizeGuardExceeded(
                f"explicit path evaluation needs more than {max_paths} paths"
            )
        for path in frontier:
            running = running & nested_formula(path, psi, spec)
        g_cur = apply_g(psi, spec, g_prev)
        if not (g_cur[start] <= running and running <= g_prev[start]):
            raise InternalConsistencyError(
                "explicit path conjunction escaped the exact-shift iterate bracket"
            )
        if g_cur == g_prev:
            if running != g_cur[start]:
                raise InternalConsistencyError(
                    "explicit path conjunction missed the exact-shift fixed point"
                )
            return running
        g_prev = g_cur
        nxt = []
        for path in frontier:
            for succ in sorted(finite_successors(spec, path[-1]), key=order.get):
                nxt.append(path + (succ,))
        frontier = nxt
        if not frontier:  # no extensions: the conjunction is already complete
            if running != g_cur[start]:
                raise InternalConsistencyError(
                    "exhausted path family disagrees with the exact-shift fixed point"
                )
            return running
    raise InternalConsistencyError("explicit path evaluation failed to stabilize")


def nested_conjunction(
    start: str,
    psi: Event,
    spec: TimingSpec,
    *,
    explicit_paths: bool = False,
    max_paths: int = 50_000,
) -> Event:
    """Intersection of all nested path formulae rooted at `start`."""
    if start not in spec.agents:
        raise InvariantViolation(f"start agent {start!r} is not in the timing spec")
    if explicit_paths:
        return _explicit_evaluation(start, psi, spec, max_paths)
    return _folded_evaluation(psi, spec).coords[start]


# -- the characterisation report ------------------------------------------------


@dataclass
class NestedReport:
    preconditions: dict
    per_agent: dict
    depths: int
    per_depth_sizes: list
    asserted_full_equality: bool
    exact_shift_below_window: bool = True

    def to_json_dict(self) -> dict:
        return {
            "preconditions": dict(self.preconditions),
            "per_agent": {a: dict(v) for a, v in self.per_agent.items()},
            "depths": self.depths,
            "per_depth_sizes": [dict(s) for s in self.per_depth_sizes],
            "asserted_full_equality": self.asserted_full_equality,
            "exact_shift_below_window": self.exact_shift_below_window,
        }


def first_instants(e: Event) -> dict:
    """Earliest time per run at which the event holds (None if never)."""
    u = e.universe
    out = {}
    for ri, run in enumerate(u.runs):
        hits = e.table[ri].nonzero()[0]
        out[run] = int(hits[0]) if hits.size else None
    return out


def verify_nested_characterization(
    psi: Event,
    spec: TimingSpec,
    *,
    explicit_paths: bool = False,
    max_paths: int = 50_000,
) -> NestedReport:
    """Compare the nested-path conjunction with both fixed points.

    Always asserted, in any finite universe: the conjunction equals the
    exact-shift fixed point, coordinate by coordinate, at every depth.

    The relation between the two fixed points depends on the bounds.  With all
    bounds finite the exact-shift fixed point must sit below the window one
    (asserted); an unbounded pair is simply dropped by the exact-shift map, so
    with mixed bounds the two can be incomparable and the report only records
    the relation.  Full equality is provable — and asserted — when the
    universe has perfect recall, psi is stable, no finite bound is positive
    (a positive bound's exact shifts clip at the horizon), and either all
    bounds are finite or psi guarantees every window coordinate eventually
    (the solvability condition).
    """
    u = psi.universe
    from .events import is_stable

    evaluation = _folded_evaluation(psi, spec)
    g_fix = timely_ck_g(psi, spec)
    f_fix = timely_ck(psi, spec)

    for agent in spec.agents:
        if evaluation.coords[agent] != g_fix[agent]:
            raise InternalConsistencyError(
                "nested conjunction disagrees with the exact-shift fixed point"
            )
        if explicit_paths:
            ex = _explicit_evaluation(agent, psi, spec, max_paths)
            if ex != g_fix[agent]:
                raise InternalConsistencyError(
                    "explicit path conjunction disagrees with the exact-shift fixed point"
                )

    g_below_f = tuple_leq(g_fix, f_fix)
    if spec.all_finite() and not g_below_f:
        raise InternalConsistencyError(
            "with finite bounds the exact-shift fixed point must sit below "
            "the window fixed point"
        )

    solvability_condition = all(
        psi <= eventually(f_fix[i]) for i in spec.agents
    )
    pre = {
        "perfect_recall": u.exhibits_perfect_recall(),
        "stable_psi": is_stable(psi),
        "all_finite": spec.all_finite(),
        "solvability_condition": solvability_condition,
        "no_positive_finite_bounds": spec.max_positive_finite() == 0,
        # acyclic bound graph: finitely many paths, depth |I| already exhaustive
        "finite_path_set": paths_are_finite(spec),
    }
    gate = (
        pre["perfect_recall"]
        and pre["stable_psi"]
        and (pre["all_finite"] or pre["solvability_condition"])
    )

    per_agent = {}
    for agent in spec.agents:
        window_only = f_fix[agent] - g_fix[agent]
        shift_only = g_fix[agent] - f_fix[agent]
        per_agent[agent] = {
            "matches_exact_shift_fixed_point": True,
            "equals_window_fixed_point": f_fix[agent] == g_fix[agent],
            "window_only_points": window_only.size,
            "exact_shift_only_points": shift_only.size,
            "first_instants_agree": first_instants(f_fix[agent])
            == first_instants(g_fix[agent]),
        }

    asserted = False
    if gate and pre["no_positive_finite_bounds"]:
        asserted = True
        if any(not per_agent[a]["equals_window_fixed_point"] for a in spec.agents):
            raise InternalConsistencyError(
                "fixed points differ although no window can clip at the horizon"
            )

    return NestedReport(
        pre,
        per_agent,
        evaluation.depths,
        evaluation.per_depth_sizes,
        asserted,
        exact_shift_below_window=g_below_f,
    )

"""Agent-indexed event tuples, the timing-spec lattice machinery, and greatest
fixed points.

The central object is `timely_ck(psi, spec)`: the greatest fixed point of the
vectorial map whose coordinate for agent i is

    knows(i, psi & AND_j within(x_j, delta(i, j)))     (j ranging over the
                                                        other agents)

computed by descending iteration from the all-full tuple.  `timely_ck_g` is
the companion fixed point that uses exact shifts instead of within-windows and
skips unbounded pairs; it is the one the nested-knowledge characterisation
reconstructs path by path.

`gfp_bruteforce_oracle` and `timely_ck_oracle` provide the independent check:
enumerate every tuple in the (finite) lattice, keep the ones below their own
image, and join them.  The packed oracle builds its operator tables from the
definition-direct evaluators in `naive`, so it shares no operator code with
the iterative engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    InternalConsistencyError,
    InvariantViolation,
    SizeGuardExceeded,
    UniverseMismatch,
)
from .events import Event, eventually, knows, shift_exact, within
from .universe import (
    DeltaValue,
    Universe,
    check_delta,
    clamp_delta,
    delta_from_json,
    delta_to_json,
    is_finite_delta,
)

DEFAULT_ORACLE_GUARD_BITS = 16


class TimingSpec:
    """A set of at least two agents plus pairwise response-time bounds.

    ``delta(i, j)`` bounds how much later than i's action j's action may
    happen; negative values force j to act before i, inf leaves the pair
    unconstrained.
    """

    __slots__ = ("agents", "_delta")

    def __init__(self, agents: Iterable[str], delta: Mapping[tuple, DeltaValue]):
        self.agents = tuple(agents)
        if not self.agents:
            raise InvariantViolation("a timing spec needs at least one agent")
        if len(set(self.agents)) != len(self.agents):
            raise InvariantViolation("duplicate agents in timing spec")
        pairs = {(i, j) for i in self.agents for j in self.agents if i != j}
        given = set(delta)
        if given != pairs:
            missing = pairs - given
            extra = given - pairs
            parts = []
            if missing:
                parts.append(f"missing pairs {sorted(missing)}")
            if extra:
                parts.append(f"unexpected pairs {sorted(extra)}")
            raise InvariantViolation("timing spec delta map: " + "; ".join(parts))
        self._delta = {pair: check_delta(v) for pair, v in delta.items()}

    def delta(self, i: str, j: str) -> DeltaValue:
        try:
            return self._delta[(i, j)]
        except KeyError:
            raise InvariantViolation(f"no delta for pair ({i!r}, {j!r})") from None

    def pairs(self):
        return [(i, j) for i in self.agents for j in self.agents if i != j]

    def others(self, i: str):
        return [j for j in self.agents if j != i]

    def normalized(self, horizon: int) -> tuple["TimingSpec", dict]:
        """Clamp finite deltas into the behaviorally distinct range for `horizon`.

        Returns the canonical spec and a map of the changed pairs.
        """
        changed = {}
        new = {}
        for pair, v in self._delta.items():
            nv = clamp_delta(v, horizon)
            new[pair] = nv
            if nv != v:
                changed[pair] = (v, nv)
        return TimingSpec(self.agents, new), changed

    def max_positive_finite(self, agent: str | None = None) -> int:
        vals = [
            v
            for (i, _), v in self._delta.items()
            if is_finite_delta(v) and (agent is None or i == agent)
        ]
        return max([int(v) for v in vals if v > 0], default=0)

    def all_finite(self) -> bool:
        return all(is_finite_delta(v) for v in self._delta.values())

    def finite_nonpositive_only(self) -> bool:
        return all(not is_finite_delta(v) or v <= 0 for v in self._delta.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimingSpec):
            return NotImplemented
        return self.agents == other.agents and self._delta == other._delta

    def to_json_dict(self) -> dict:
        return {f"{i}->{j}": delta_to_json(v) for (i, j), v in sorted(self._delta.items())}

    @classmethod
    def from_json_dict(cls, agents: Iterable[str], doc: Mapping[str, object]) -> "TimingSpec":
        delta = {}
        for key, raw in doc.items():
            try:
                i, j = key.split("->")
            except ValueError:
                raise InvariantViolation(f"bad delta key {key!r}, expected 'i->j'") from None
            delta[(i, j)] = delta_from_json(raw)
        return cls(agents, delta)

    def __repr__(self) -> str:
        return f"TimingSpec({list(self.agents)}, {self.to_json_dict()})"


class EventTuple:
    """An agent-indexed tuple of events over one universe."""

    __slots__ = ("universe", "agents", "coords")

    def __init__(self, universe: Universe, coords: Mapping[str, Event]):
        self.universe = universe
        self.agents = tuple(coords)
        if not self.agents:
            raise InvariantViolation("an event tuple needs at least one coordinate")
        for agent, e in coords.items():
            universe.agent_index(agent)
            if e.universe is not universe:
                raise UniverseMismatch(f"coordinate {agent!r} lives in another universe")
        self.coords = dict(coords)

    @classmethod
    def bottom(cls, universe: Universe, agents: Iterable[str]) -> "EventTuple":
        return cls(universe, {a: Event.empty(universe) for a in agents})

    @classmethod
    def top(cls, universe: Universe, agents: Iterable[str]) -> "EventTuple":
        return cls(universe, {a: Event.full(universe) for a in agents})

    def __getitem__(self, agent: str) -> Event:
        return self.coords[agent]

    def _same(self, other: "EventTuple") -> None:
        if not isinstance(other, EventTuple):
            raise TypeError(f"expected an EventTuple, got {type(other).__name__}")
        if other.universe is not self.universe:
            raise UniverseMismatch("tuples belong to different universes")
        if other.agents != self.agents:
            raise InvariantViolation(
                f"agent sets differ: {self.agents} vs {other.agents}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventTuple):
            return NotImplemented
        self._same(other)
        return all(self.coords[a] == other.coords[a] for a in self.agents)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    __hash__ = None

    def sizes(self) -> dict[str, int]:
        return {a: self.coords[a].size for a in self.agents}

    def to_json_dict(self) -> dict:
        return {a: self.coords[a].to_json_list() for a in self.agents}

    @classmethod
    def from_json_dict(cls, universe: Universe, doc: Mapping) -> "EventTuple":
        return cls(
            universe,
            {a: Event.from_json_list(universe, pts) for a, pts in doc.items()},
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"{a}:{e.size}" for a, e in self.coords.items())
        return f"EventTuple({inner})"


def tuple_leq(x: EventTuple, y: EventTuple) -> bool:
    x._same(y)
    return all(x[a] <= y[a] for a in x.agents)


def tuple_join(x: EventTuple, y: EventTuple) -> EventTuple:
    x._same(y)
    return EventTuple(x.universe, {a: x[a] | y[a] for a in x.agents})


def tuple_meet(x: EventTuple, y: EventTuple) -> EventTuple:
    x._same(y)
    return EventTuple(x.universe, {a: x[a] & y[a] for a in x.agents})


def tuple_union(x: EventTuple) -> Event:
    out = Event.empty(x.universe)
    for a in x.agents:
        out = out | x[a]
    return out


# -- the vectorial maps ------------------------------------------------------


def _check_shapes(psi: Event, spec: TimingSpec, x: EventTuple) -> None:
    if x.universe is not psi.universe:
        raise UniverseMismatch("psi and tuple belong to different universes")
    if x.agents != spec.agents:
        raise InvariantViolation(
            f"tuple agents {x.agents} do not match spec agents {spec.agents}"
        )
    for a in spec.agents:
        psi.universe.agent_index(a)


def apply_f(psi: Event, spec: TimingSpec, x: EventTuple) -> EventTuple:
    """One application of the window-based coordination map."""
    _check_shapes(psi, spec, x)
    coords = {}
    for i in spec.agents:
        body = psi
        for j in spec.others(i):
            body = body & within(x[j], spec.delta(i, j))
        coords[i] = knows(i, body)
    return EventTuple(psi.universe, coords)


def apply_g(psi: Event, spec: TimingSpec, x: EventTuple) -> EventTuple:
    """One application of the exact-shift map; unbounded pairs impose nothing."""
    _check_shapes(psi, spec, x)
    coords = {}
    for i in spec.agents:
        body = psi
        for j in spec.others(i):
            d = spec.delta(i, j)
            if is_finite_delta(d):
                body = body & shift_exact(x[j], d)
        coords[i] = knows(i, body)
    return EventTuple(psi.universe, coords)


# -- greatest fixed points ---------------------------------------------------


@dataclass
class GfpResult:
    value: EventTuple
    iterations: int
    trace: list  # per-iteration coordinate sizes


def gfp(step: Callable[[EventTuple], EventTuple], start: EventTuple) -> GfpResult:
    """Iterate a monotone tuple map from `start` until two iterates coincide.

    On a finite lattice the stabilized value of a descending Kleene iteration
    from the top is the greatest fixed point.  Each strict step must remove at
    least one point from at least one coordinate, which bounds the iteration
    count; exceeding the bound, or any non-descending step, means the supplied
    map was not monotone and is reported as an internal error.
    """
    bound = start.universe.n_points * len(start.agents) + 1
    cur = start
    trace = [cur.sizes()]
    for iteration in range(1, bound + 1):
        nxt = step(cur)
        if not tuple_leq(nxt, cur):
            raise InternalConsistencyError(
                "fixed-point iteration did not descend; the map is not monotone"
            )
        trace.append(nxt.sizes())
        if nxt == cur:
            return GfpResult(nxt, iteration, trace)
        cur = nxt
    raise InternalConsistencyError(
        f"fixed-point iteration failed to stabilize within {bound} steps"
    )


def timely_ck_info(psi: Event, spec: TimingSpec) -> GfpResult:
    top = EventTuple.top(psi.universe, spec.agents)
    return gfp(lambda x: apply_f(psi, spec, x), top)


def timely_ck(psi: Event, spec: TimingSpec) -> EventTuple:
    return timely_ck_info(psi, spec).value


def timely_ck_g_info(psi: Event, spec: TimingSpec) -> GfpResult:
    top = EventTuple.top(psi.universe, spec.agents)
    return gfp(lambda x: apply_g(psi, spec, x), top)


def timely_ck_g(psi: Event, spec: TimingSpec) -> EventTuple:
    return timely_ck_g_info(psi, spec).value


def check_induction_rule(psi: Event, spec: TimingSpec, xi: EventTuple) -> bool:
    """Whether `xi` is below its own image; such tuples must sit below the gfp.

    Returns the pre-fixed-point verdict.  When it is true but `xi` is not below
    `timely_ck(psi, spec)`, the greatest-fixed-point computation is broken and
    an internal error is raised.
    """
    pre_fixed = tuple_leq(xi, apply_f(psi, spec, xi))
    if pre_fixed and not tuple_leq(xi, timely_ck(psi, spec)):
        raise InternalConsistencyError(
            "a tuple below its own image escaped the greatest fixed point"
        )
    return pre_fixed


# -- brute-force oracles --------------------------------------------------------


def _oracle_bits(universe: Universe, n_agents: int, guard_bits: int) -> int:
    bits = universe.n_points * n_agents
    if bits > guard_bits:
        raise SizeGuardExceeded(
            f"oracle would sweep 2^{bits} tuples; guard is 2^{guard_bits}"
        )
    return bits


def gfp_bruteforce_oracle(
    step: Callable[[EventTuple], EventTuple],
    universe: Universe,
    agents: Iterable[str],
    *,
    guard_bits: int = DEFAULT_ORACLE_GUARD_BITS,
) -> EventTuple:
    """Join of all tuples below their own image, by explicit enumeration.

    Independent of the iterative computation: no fixed-point iteration at all,
    just a sweep of the entire tuple lattice.  Exponential, hence guarded.
    """
    agents = tuple(agents)
    p = universe.n_points
    _oracle_bits(universe, len(agents), guard_bits)
    n_runs, n_times = universe.n_runs, universe.n_times

    def mask_to_event(mask: int) -> Event:
        table = np.zeros(p, dtype=bool)
        for b in range(p):
            if mask >> b & 1:
                table[b] = True
        return Event(universe, table.reshape(n_runs, n_times))

    join = EventTuple.bottom(universe, agents)
    for packed in range(1 << (p * len(agents))):
        coords = {
            a: mask_to_event((packed >> (p * k)) & ((1 << p) - 1))
            for k, a in enumerate(agents)
        }
        x = EventTuple(universe, coords)
        if tuple_leq(x, step(x)):
            join = tuple_join(join, x)
    return join


def timely_ck_oracle(
    psi: Event,
    spec: TimingSpec,
    *,
    guard_bits: int = DEFAULT_ORACLE_GUARD_BITS,
) -> EventTuple:
    """Packed-bitmask version of the Tarski sweep for the window-based map.

    Operator tables come from the definition-direct evaluators, the sweep runs
    in a compiled kernel (or its numpy fallback); nothing is shared with
    `timely_ck` except the universe itself.
    """
    from .packed import packed_timely_ck_oracle

    _oracle_bits(psi.universe, len(spec.agents), guard_bits)
    return packed_timely_ck_oracle(psi, spec)


# -- degenerate fixed points ---------------------------------------------------


def eventual_ck(agents: Iterable[str], psi: Event) -> Event:
    """Greatest fixed point of x -> AND_i eventually(knows(i, psi & x))."""
    agents = tuple(agents)
    if not agents:
        raise InvariantViolation("eventual_ck requires a nonempty agent set")
    cur = Event.full(psi.universe)
    while True:
        nxt = Event.full(psi.universe)
        for i in agents:
            nxt = nxt & eventually(knows(i, psi & cur))
        if nxt == cur:
            return cur
        cur = nxt


def window_everyone_knows(agents: Iterable[str], e: Event, eps: int) -> Event:
    """Points covered by a length-eps time window in which every agent knows `e`.

    A window is a full interval {a .. a+eps} inside 0..H containing the point's
    time; eps is clamped to the horizon, where the single window is 0..H.
    """
    agents = tuple(agents)
    eps = check_delta(eps, finite_only=True)
    if eps < 0:
        raise InvariantViolation("window width must be nonnegative")
    u = e.universe
    eps = min(eps, u.horizon)
    n_starts = u.n_times - eps

    per_agent_hit = []
    for i in agents:
        k = knows(i, e).table
        hit = np.zeros((u.n_runs, n_starts), dtype=bool)
        for off in range(eps + 1):
            hit |= k[:, off : off + n_starts]
        per_agent_hit.append(hit)
    window_ok = per_agent_hit[0]
    for hit in per_agent_hit[1:]:
        window_ok = window_ok & hit

    out = np.zeros((u.n_runs, u.n_times), dtype=bool)
    for a in range(n_starts):
        out[:, a : a + eps + 1] |= window_ok[:, a : a + 1]
    return Event(u, out)


def epsilon_ck(agents: Iterable[str], psi: Event, eps: int) -> Event:
    """Greatest fixed point of x -> window_everyone_knows(psi & x, eps)."""
    agents = tuple(agents)
    if not agents:
        raise InvariantViolation("epsilon_ck requires a nonempty agent set")
    cur = Event.full(psi.universe)
    while True:
        nxt = window_everyone_knows(agents, psi & cur, eps)
        if nxt == cur:
            return cur
        cur = nxt

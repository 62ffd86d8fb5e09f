"""Events over a universe and the temporal / epistemic operators acting on them.

An event is a set of (run, time) points, stored as a dense boolean table of
shape (n_runs, n_times).  All operators are pure: they return fresh events and
never mutate their inputs.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import InternalConsistencyError, InvariantViolation, UniverseMismatch
from .universe import INF, DeltaValue, Point, Universe, check_delta


class Event:
    """A set of points of one universe, as a dense boolean membership table."""

    __slots__ = ("universe", "table")

    def __init__(self, universe: Universe, table: np.ndarray):
        if table.shape != (universe.n_runs, universe.n_times):
            raise InvariantViolation(
                f"event table shape {table.shape} does not match universe "
                f"({universe.n_runs}, {universe.n_times})"
            )
        table = np.ascontiguousarray(table, dtype=bool)
        table.setflags(write=False)
        self.universe = universe
        self.table = table

    # -- constructors --------------------------------------------------------

    @classmethod
    def empty(cls, universe: Universe) -> "Event":
        return cls(universe, np.zeros((universe.n_runs, universe.n_times), dtype=bool))

    @classmethod
    def full(cls, universe: Universe) -> "Event":
        return cls(universe, np.ones((universe.n_runs, universe.n_times), dtype=bool))

    @classmethod
    def from_points(cls, universe: Universe, points: Iterable) -> "Event":
        table = np.zeros((universe.n_runs, universe.n_times), dtype=bool)
        for run, t in points:
            table[universe.run_index(run), universe.check_time(t)] = True
        return cls(universe, table)

    # -- set algebra -----------------------------------------------------------

    def _same(self, other: "Event") -> None:
        if not isinstance(other, Event):
            raise TypeError(f"expected an Event, got {type(other).__name__}")
        if other.universe is not self.universe:
            raise UniverseMismatch("events belong to different universes")

    def __and__(self, other: "Event") -> "Event":
        self._same(other)
        return Event(self.universe, self.table & other.table)

    def __or__(self, other: "Event") -> "Event":
        self._same(other)
        return Event(self.universe, self.table | other.table)

    def __sub__(self, other: "Event") -> "Event":
        self._same(other)
        return Event(self.universe, self.table & ~other.table)

    def __invert__(self) -> "Event":
        return Event(self.universe, ~self.table)

    def __le__(self, other: "Event") -> bool:
        self._same(other)
        return bool(np.all(~self.table | other.table))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        self._same(other)
        return bool(np.array_equal(self.table, other.table))

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    __hash__ = None  # mutable-free but identity hashing would invite mistakes

    def is_empty(self) -> bool:
        return not self.table.any()

    @property
    def size(self) -> int:
        return int(self.table.sum())

    def __contains__(self, point) -> bool:
        run, t = point
        return bool(self.table[self.universe.run_index(run), self.universe.check_time(t)])

    def points(self) -> list[Point]:
        u = self.universe
        return [Point(u.runs[r], int(t)) for r, t in zip(*np.nonzero(self.table))]

    def to_json_list(self) -> list:
        return sorted([p.run, p.time] for p in self.points())

    @classmethod
    def from_json_list(cls, universe: Universe, doc: Sequence) -> "Event":
        return cls.from_points(universe, ((run, t) for run, t in doc))

    def __repr__(self) -> str:
        return f"Event({self.size} of {self.universe.n_points} points)"


def _require_same_universe(*events: Event) -> Universe:
    u = events[0].universe
    for e in events[1:]:
        if e.universe is not u:
            raise UniverseMismatch("events belong to different universes")
    return u


# -- temporal operators ---------------------------------------------------------


def eventually(e: Event) -> Event:
    """Points of runs in which the event holds at some time (past or future)."""
    hit = e.table.any(axis=1)
    return Event(e.universe, np.repeat(hit[:, None], e.universe.n_times, axis=1))


def shift_exact(e: Event, eps: DeltaValue) -> Event:
    """The event holds exactly `eps` steps from now; shifts leaving 0..H are false."""
    eps = check_delta(eps, finite_only=True)
    u = e.universe
    out = np.zeros_like(e.table)
    n = u.n_times
    lo = max(0, -eps)
    hi = min(n, n - eps)
    if lo < hi:
        out[:, lo:hi] = e.table[:, lo + eps : hi + eps]
    return Event(u, out)


def within(e: Event, eps: DeltaValue) -> Event:
    """The event holds at some time no later than `eps` steps from now.

    The witness time ranges over the whole horizon 0..H, so for eps = inf this
    is exactly `eventually`, and for eps = 0 it means "now or previously".
    """
    eps = check_delta(eps)
    if eps == INF:
        return eventually(e)
    u = e.universe
    cum = np.logical_or.accumulate(e.table, axis=1)
    bound = np.arange(u.n_times) + eps
    out = cum[:, np.clip(bound, 0, u.horizon)] & (bound >= 0)[None, :]
    return Event(u, out)


def is_stable(e: Event) -> bool:
    """True iff once the event holds in a run it holds for the rest of it."""
    return e == within(e, 0)


# -- epistemic operators ----------------------------------------------------------


def knows(agent: str, e: Event) -> Event:
    """Points at which every point the agent cannot distinguish satisfies `e`."""
    u = e.universe
    ids = u.state_ids(agent)
    ok = np.ones(u.n_state_classes(agent), dtype=bool)
    ok[ids[~e.table]] = False
    return Event(u, ok[ids])


def everyone_knows(agents: Iterable[str], e: Event) -> Event:
    agents = tuple(agents)
    if not agents:
        raise InvariantViolation("everyone_knows requires a nonempty agent set")
    out = knows(agents[0], e)
    for agent in agents[1:]:
        out = out & knows(agent, e)
    return out


def common_knowledge(agents: Iterable[str], e: Event) -> Event:
    """Stabilized intersection of iterated everyone-knows.

    Computed twice: as the descending chain of everyone-knows iterates, and as
    the greatest fixed point of x -> everyone_knows(e & x) iterated from the
    full event.  The two must agree exactly; a mismatch is an engine defect.
    """
    agents = tuple(agents)
    if not agents:
        raise InvariantViolation("common_knowledge requires a nonempty agent set")

    chain = everyone_knows(agents, e)
    while True:
        nxt = everyone_knows(agents, chain)
        if nxt == chain:
            break
        chain = nxt

    fp = Event.full(e.universe)
    while True:
        nxt = everyone_knows(agents, e & fp)
        if nxt == fp:
            break
        fp = nxt

    if chain != fp:
        raise InternalConsistencyError(
            "iterated everyone-knows and its fixed-point computation disagree"
        )
    return fp


def is_local(agent: str, e: Event) -> bool:
    """True iff the event's truth is determined by the agent's local state."""
    return e == knows(agent, e)


def exhibits_perfect_recall(universe: Universe) -> bool:
    return universe.exhibits_perfect_recall()

"""Finite universes of runs over discrete time.

A universe fixes an ordered set of agents, an ordered set of runs, a time
horizon H (times range over 0..H inclusive) and, for every (agent, run, time)
triple, an opaque local-state value.  Two points are indistinguishable to an
agent exactly when the agent's local state at both points is identical; all
knowledge operators are derived from that relation alone.

In synchronous mode the current time must be recoverable from every local
state (states of one agent at two distinct times are never equal), which is
validated at construction.  Asynchronous mode drops that requirement, so a
state may recur at different times and knowledge then quantifies across time.
"""

from __future__ import annotations

import json
import math
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple, Union

import numpy as np

from .errors import InvariantViolation

INF = math.inf

DeltaValue = Union[int, float]  # float is only ever +inf


class Point(NamedTuple):
    run: str
    time: int


def is_finite_delta(value: DeltaValue) -> bool:
    return value != INF


def check_delta(value, *, finite_only: bool = False) -> DeltaValue:
    """Validate a time-difference value: an int, or +inf."""
    if value == INF:
        if finite_only:
            raise InvariantViolation("a finite time difference is required here")
        return INF
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvariantViolation(f"time difference must be an integer or inf, got {value!r}")
    return int(value)


def clamp_delta(value: DeltaValue, horizon: int) -> DeltaValue:
    """Canonicalize a delta against a horizon.

    Any finite value above H behaves exactly like H (the window already covers
    every time), and any value below -(H+1) behaves exactly like -(H+1) (the
    window is empty at every point).  Values in between are kept as-is.
    """
    if value == INF:
        return INF
    return max(-(horizon + 1), min(int(value), horizon))


def delta_to_json(value: DeltaValue):
    return "inf" if value == INF else int(value)


def delta_from_json(raw) -> DeltaValue:
    if raw == "inf" or raw == INF:
        return INF
    return check_delta(raw)


StateMap = Union[
    Mapping[tuple, Hashable],
    Callable[[str, str, int], Hashable],
]


class Universe:
    """A finite system of runs with per-agent local-state assignments."""

    __slots__ = (
        "agents",
        "runs",
        "horizon",
        "synchronous",
        "_agent_pos",
        "_run_pos",
        "_state_ids",
        "_id_labels",
        "_n_classes",
    )

    def __init__(
        self,
        agents: Iterable[str],
        runs: Iterable[str],
        horizon: int,
        states: StateMap,
        *,
        synchronous: bool = True,
    ):
        self.agents = tuple(agents)
        self.runs = tuple(runs)
        if not self.agents:
            raise InvariantViolation("a universe needs at least one agent")
        if not self.runs:
            raise InvariantViolation("a universe needs at least one run")
        if len(set(self.agents)) != len(self.agents):
            raise InvariantViolation("duplicate agent ids")
        if len(set(self.runs)) != len(self.runs):
            raise InvariantViolation("duplicate run ids")
        if horizon < 0:
            raise InvariantViolation("horizon must be nonnegative")
        self.horizon = int(horizon)
        self.synchronous = bool(synchronous)
        self._agent_pos = {a: k for k, a in enumerate(self.agents)}
        self._run_pos = {r: k for k, r in enumerate(self.runs)}

        if callable(states):
            lookup = states
        else:
            mapping = dict(states)

            def lookup(agent, run, t):
                try:
                    return mapping[(agent, run, t)]
                except KeyError:
                    raise InvariantViolation(
                        f"local state undefined for ({agent!r}, {run!r}, {t})"
                    ) from None

        n_times = self.horizon + 1
        self._state_ids = []
        self._id_labels = []
        self._n_classes = []
        for agent in self.agents:
            interned: dict = {}
            labels: list = []
            ids = np.empty((len(self.runs), n_times), dtype=np.int64)
            for ri, run in enumerate(self.runs):
                for t in range(n_times):
                    label = lookup(agent, run, t)
                    sid = interned.get(label)
                    if sid is None:
                        sid = len(interned)
                        interned[label] = sid
                        labels.append(label)
                    ids[ri, t] = sid
            ids.setflags(write=False)
            self._state_ids.append(ids)
            self._id_labels.append(labels)
            self._n_classes.append(len(labels))

        if self.synchronous:
            self._check_time_in_state()

    def _check_time_in_state(self) -> None:
        for agent, ids in zip(self.agents, self._state_ids):
            seen_at: dict[int, int] = {}
            for t in range(self.n_times):
                for sid in np.unique(ids[:, t]):
                    prev = seen_at.setdefault(int(sid), t)
                    if prev != t:
                        raise InvariantViolation(
                            f"synchronous universe: agent {agent!r} has the same "
                            f"state at times {prev} and {t}"
                        )

    # -- basic geometry ----------------------------------------------------

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    @property
    def n_times(self) -> int:
        return self.horizon + 1

    @property
    def n_points(self) -> int:
        return self.n_runs * self.n_times

    def agent_index(self, agent: str) -> int:
        try:
            return self._agent_pos[agent]
        except KeyError:
            raise InvariantViolation(f"unknown agent {agent!r}") from None

    def run_index(self, run: str) -> int:
        try:
            return self._run_pos[run]
        except KeyError:
            raise InvariantViolation(f"unknown run {run!r}") from None

    def check_time(self, t: int) -> int:
        if not 0 <= t <= self.horizon:
            raise InvariantViolation(f"time {t} outside 0..{self.horizon}")
        return int(t)

    # -- local states --------------------------------------------------------

    def state_ids(self, agent: str) -> np.ndarray:
        """Interned state ids of one agent, shape (n_runs, n_times)."""
        return self._state_ids[self.agent_index(agent)]

    def n_state_classes(self, agent: str) -> int:
        return self._n_classes[self.agent_index(agent)]

    def state_label(self, agent: str, run: str, t: int) -> Hashable:
        ai = self.agent_index(agent)
        sid = self._state_ids[ai][self.run_index(run), self.check_time(t)]
        return self._id_labels[ai][int(sid)]

    def exhibits_perfect_recall(self) -> bool:
        """Whether every agent's current state determines its set of past states.

        Checked literally: for each agent, equal state ids at any two points
        must come with equal sets of strictly earlier state ids along the
        respective runs.
        """
        for ids in self._state_ids:
            history: dict[int, frozenset] = {}
            for ri in range(self.n_runs):
                row = ids[ri]
                for t in range(self.n_times):
                    prior = frozenset(int(s) for s in row[:t])
                    sid = int(row[t])
                    if history.setdefault(sid, prior) != prior:
                        return False
        return True

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        states = {
            agent: {
                run: [str(self.state_label(agent, run, t)) for t in range(self.n_times)]
                for run in self.runs
            }
            for agent in self.agents
        }
        return {
            "agents": list(self.agents),
            "runs": list(self.runs),
            "horizon": self.horizon,
            "synchronous": self.synchronous,
            "states": states,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Universe":
        try:
            agents = doc["agents"]
            runs = doc["runs"]
            horizon = doc["horizon"]
            states = doc["states"]
        except KeyError as exc:
            raise InvariantViolation(f"universe document missing field {exc}") from None

        def lookup(agent, run, t):
            try:
                return states[agent][run][t]
            except (KeyError, IndexError):
                raise InvariantViolation(
                    f"universe document: no state for ({agent!r}, {run!r}, {t})"
                ) from None

        return cls(
            agents,
            runs,
            horizon,
            lookup,
            synchronous=doc.get("synchronous", True),
        )

    def __repr__(self) -> str:
        mode = "sync" if self.synchronous else "async"
        return (
            f"Universe(agents={list(self.agents)}, runs={len(self.runs)}, "
            f"horizon={self.horizon}, {mode})"
        )

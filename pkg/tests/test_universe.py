import json

import pytest

from timelyck.errors import InvariantViolation
from timelyck.universe import INF, Universe, check_delta, clamp_delta


def test_basic_geometry(toy):
    assert toy.agents == ("a", "b")
    assert toy.runs == ("r0", "r1")
    assert toy.n_times == 4
    assert toy.n_points == 8


def test_state_lookup(toy):
    assert toy.state_label("a", "r1", 0) == (0, "-")
    assert toy.state_label("a", "r1", 1) == (1, 1)
    assert toy.state_label("b", "r1", 1) == (1, "-")


def test_states_must_be_total():
    with pytest.raises(InvariantViolation):
        Universe(["a"], ["r0"], 2, {("a", "r0", 0): "x", ("a", "r0", 1): "y"})


def test_synchronous_mode_rejects_time_ambiguous_states():
    states = {("a", "r0", 0): "same", ("a", "r0", 1): "same"}
    with pytest.raises(InvariantViolation):
        Universe(["a"], ["r0"], 1, states)
    # the same assignment is fine asynchronously
    u = Universe(["a"], ["r0"], 1, states, synchronous=False)
    assert u.n_state_classes("a") == 1


def test_unknown_ids_rejected(toy):
    with pytest.raises(InvariantViolation):
        toy.agent_index("z")
    with pytest.raises(InvariantViolation):
        toy.run_index("r9")
    with pytest.raises(InvariantViolation):
        toy.check_time(4)


def test_perfect_recall(toy, toy_forgetful, single_run):
    assert toy.exhibits_perfect_recall()
    assert single_run.exhibits_perfect_recall()
    assert not toy_forgetful.exhibits_perfect_recall()


def test_json_round_trip(toy):
    doc = json.loads(toy.to_json())
    again = Universe.from_json_dict(doc)
    assert again.agents == toy.agents
    assert again.runs == toy.runs
    assert again.horizon == toy.horizon
    # labels are stringified but the indistinguishability structure is kept
    for agent in toy.agents:
        assert (again.state_ids(agent) == toy.state_ids(agent)).all()
    assert toy.to_json() == again.to_json()


def test_delta_validation():
    assert check_delta(3) == 3
    assert check_delta(INF) == INF
    with pytest.raises(InvariantViolation):
        check_delta(1.5)
    with pytest.raises(InvariantViolation):
        check_delta(INF, finite_only=True)
    with pytest.raises(InvariantViolation):
        check_delta(True)


def test_delta_clamping():
    assert clamp_delta(100, 3) == 3
    assert clamp_delta(-100, 3) == -4
    assert clamp_delta(2, 3) == 2
    assert clamp_delta(INF, 3) == INF

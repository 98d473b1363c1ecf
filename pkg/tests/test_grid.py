import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from morl_drc.grid import (
    GridDims,
    ResourceAction,
    TimeslotAction,
    action_count,
    action_energy,
    enumerate_actions,
    validate_action,
)


def brute_force_count(M, K):
    """Count binary M x K matrices with at most one 1 per row and per column."""
    bits = np.array(list(itertools.product((0, 1), repeat=M * K)), dtype=np.int8)
    mats = bits.reshape(-1, M, K)
    ok = (mats.sum(axis=1) <= 1).all(axis=1) & (mats.sum(axis=2) <= 1).all(axis=1)
    return int(ok.sum())


def test_brute_force_oracle_sanity():
    # (none, f1, f2) and 1 + 3*2 + 3*2 by hand
    assert brute_force_count(2, 1) == 3
    assert brute_force_count(3, 2) == 13


@pytest.mark.parametrize("M,K,expected", [(1, 1, 2), (2, 2, 7), (6, 2, 43)])
def test_counts_beyond_grid_validation(M, K, expected):
    # GridDims insists on K_U < M; enumeration itself only needs the sizes.
    dims = SimpleNamespace(num_freqs=M, num_ues=K)
    assert brute_force_count(M, K) == expected
    acts = enumerate_actions(dims)
    assert len(acts) == expected
    assert acts[0].freqs == (None,) * K


def test_default_scenario_has_43_actions():
    assert len(enumerate_actions(GridDims())) == 43


def test_degenerate_grids_are_rejected():
    with pytest.raises(ValueError):
        GridDims(num_freqs=1, num_ues=1)
    with pytest.raises(ValueError):
        GridDims(num_freqs=2, num_ues=2)


@pytest.mark.parametrize("M", range(2, 7))
@pytest.mark.parametrize("K", range(1, 4))
def test_count_matches_brute_force_and_closed_form(M, K):
    # K_U >= M only fails GridDims validation, the counting is still defined
    dims = GridDims(num_freqs=M, num_ues=K) if K < M else SimpleNamespace(num_freqs=M, num_ues=K)
    acts = enumerate_actions(dims)
    assert len(acts) == brute_force_count(M, K) == action_count(dims)
    assert len(set(acts)) == len(acts)
    assert all(validate_action(a.matrix(M), dims) for a in acts)


def test_ordering_is_lexicographic_with_idle_first():
    acts = enumerate_actions(GridDims())
    assert acts[0] == ResourceAction((None, None))
    assert acts[1] == ResourceAction((None, 0))
    assert acts[7] == ResourceAction((0, None))
    assert acts[8] == ResourceAction((0, 1))
    assert enumerate_actions(GridDims()) == acts


def test_validate_action():
    dims = GridDims()
    assert validate_action(np.zeros((6, 2)), dims)
    both_f3 = np.zeros((6, 2))
    both_f3[2, :] = 1
    assert not validate_action(both_f3, dims)
    ok = np.zeros((6, 2))
    ok[0, 0] = ok[3, 1] = 1
    assert validate_action(ok, dims)
    two_freqs = np.zeros((6, 2))
    two_freqs[[0, 1], 0] = 1
    assert not validate_action(two_freqs, dims)
    with pytest.raises(ValueError):
        validate_action(np.zeros((5, 2)), dims)


def test_action_energy():
    assert action_energy(ResourceAction((None, None))) == 0
    assert action_energy(ResourceAction((0, 4))) == 2
    assert action_energy(ResourceAction((None, 2))) == 1
    dims = GridDims(num_freqs=5, num_ues=3)
    assert max(action_energy(a) for a in enumerate_actions(dims)) == 3


def test_matrix_round_trip():
    for a in enumerate_actions(GridDims(num_freqs=4, num_ues=3)):
        assert ResourceAction.from_matrix(a.matrix(4)) == a


@pytest.mark.parametrize(
    "kwargs", [dict(num_freqs=0), dict(num_ues=6, num_freqs=6), dict(num_minislots=0)]
)
def test_invalid_dims(kwargs):
    with pytest.raises(ValueError):
        GridDims(**kwargs)


def test_timeslot_action_holds_minislots():
    ts = TimeslotAction(tuple(enumerate_actions(GridDims())[:6]))
    assert len(ts.per_minislot) == 6

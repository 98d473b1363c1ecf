"""Time-frequency resource grid and the per-mini-slot action space.

A mini-slot action assigns each UE at most one frequency, and no frequency
to more than one UE.  Actions are stored compactly as a tuple with one
entry per UE: ``None`` (UE silent) or a 0-based frequency index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, perm

import numpy as np


@dataclass(frozen=True)
class GridDims:
    num_freqs: int = 6
    num_minislots: int = 6
    num_ues: int = 2
    num_interferers: int = 1

    def __post_init__(self):
        for name in ("num_freqs", "num_minislots", "num_ues", "num_interferers"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.num_ues >= self.num_freqs:
            raise ValueError(
                f"need num_ues < num_freqs, got num_ues={self.num_ues}, num_freqs={self.num_freqs}"
            )


@dataclass(frozen=True)
class ResourceAction:
    """Frequency assignment of every UE within one mini-slot."""

    freqs: tuple[int | None, ...]

    @property
    def num_ues(self) -> int:
        return len(self.freqs)

    def matrix(self, num_freqs: int) -> np.ndarray:
        """Binary ``num_freqs x num_ues`` assignment matrix."""
        out = np.zeros((num_freqs, self.num_ues), dtype=np.int8)
        for i, m in enumerate(self.freqs):
            if m is not None:
                out[m, i] = 1
        return out

    @classmethod
    def from_matrix(cls, assign) -> "ResourceAction":
        assign = np.asarray(assign)
        if assign.ndim != 2:
            raise ValueError("assignment matrix must be 2-D")
        freqs = []
        for i in range(assign.shape[1]):
            used = np.flatnonzero(assign[:, i])
            if len(used) > 1:
                raise ValueError(f"UE {i} is assigned {len(used)} frequencies")
            freqs.append(int(used[0]) if len(used) else None)
        return cls(tuple(freqs))

    def __str__(self):
        return "(" + ",".join("-" if m is None else f"f{m + 1}" for m in self.freqs) + ")"


@dataclass(frozen=True)
class TimeslotAction:
    per_minislot: tuple[ResourceAction, ...]

    def __post_init__(self):
        if len(self.per_minislot) == 0:
            raise ValueError("a timeslot action needs at least one mini-slot")


def enumerate_actions(dims: GridDims) -> list[ResourceAction]:
    """All collision-free assignments, in a fixed order.

    Order is lexicographic over the per-UE choices (UE 1 most significant),
    with "silent" sorting before f1.  Index 0 is therefore the idle action.
    Lookup-table columns bind to this order.
    """
    choices = [None] + list(range(dims.num_freqs))
    actions = []
    for combo in itertools.product(choices, repeat=dims.num_ues):
        used = [m for m in combo if m is not None]
        if len(used) == len(set(used)):
            actions.append(ResourceAction(combo))
    return actions


def action_count(dims: GridDims) -> int:
    """Closed form of ``len(enumerate_actions(dims))``."""
    M, K = dims.num_freqs, dims.num_ues
    return sum(comb(K, k) * perm(M, k) for k in range(K + 1))


def validate_action(assign, dims: GridDims) -> bool:
    """True iff the binary matrix respects both occupancy constraints.

    Raises ValueError when the matrix shape does not match ``dims``.
    """
    assign = np.asarray(assign)
    expected = (dims.num_freqs, dims.num_ues)
    if assign.shape != expected:
        raise ValueError(f"assignment shape {assign.shape} != {expected}")
    if not np.isin(assign, (0, 1)).all():
        return False
    per_ue = assign.sum(axis=0)
    per_freq = assign.sum(axis=1)
    return bool((per_ue <= 1).all() and (per_freq <= 1).all())


def action_energy(action: ResourceAction) -> int:
    """Number of resource blocks the action occupies."""
    return sum(m is not None for m in action.freqs)


def action_arrays(actions: list[ResourceAction]) -> tuple[np.ndarray, np.ndarray]:
    """Dense view of an action list for vectorised stepping.

    Returns ``(ue_freq, energy)`` where ``ue_freq[a, i]`` is the frequency of
    UE ``i`` under action ``a`` or -1 when silent.
    """
    ue_freq = np.array(
        [[-1 if m is None else m for m in a.freqs] for a in actions], dtype=np.int64
    )
    energy = (ue_freq >= 0).sum(axis=1)
    return ue_freq, energy

"""Per-mini-slot multi-objective R-learning with growing lookup tables.

Each mini-slot of the timeslot gets its own independent agent.  An agent
keeps a list of quantized spectrum states discovered so far, two
action-value tables (throughput and negative energy) with one row per
stored state, and a 2-vector estimate of the average reward.  Actions are
chosen by maximising the weighted sum ``w . q``; the conventional
single-objective R-learner is the same machinery with ``w_P = 0``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .grid import ResourceAction

EXPLORE_BY_VALUE = "value"
EXPLORE_BY_FLAG = "flag"


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform dB quantizer relative to ``reference_power`` (the noise floor)."""

    step_db: float = 5.0
    levels: int = 8
    reference_power: float = 0.01

    def __post_init__(self):
        if self.step_db <= 0 or self.levels < 1 or self.reference_power <= 0:
            raise ValueError("quantizer needs step_db > 0, levels >= 1, reference_power > 0")


def quantize(powers, config: QuantizerConfig = QuantizerConfig()) -> np.ndarray:
    """Map received powers to integer bins, rounding half up.

    ``bin = round(10 log10(p / p_ref) / step_db)`` clamped to ``[0, levels-1]``.
    """
    powers = np.asarray(powers, dtype=float)
    if (powers <= 0).any():
        raise ValueError("powers must be strictly positive to quantize")
    db = 10.0 * np.log10(powers / config.reference_power)
    bins = np.floor(db / config.step_db + 0.5)
    return np.clip(bins, 0, config.levels - 1).astype(np.int64)


@dataclass(frozen=True)
class LearnParams:
    w: tuple[float, float] = (1.0, 0.5)
    kappa_q: float = 0.1
    kappa_r: float = 0.05
    epsilon: float = 0.1
    eta: float = 0.1
    q0: tuple[float, float] = (0.0, 0.0)
    # "value": untried = scalarized value still equal to w . q0
    # "flag": untried = never updated
    exploration_set: str = EXPLORE_BY_VALUE
    epsilon_schedule: Callable[[int], float] | None = None

    def __post_init__(self):
        w_r, w_p = self.w
        if w_r < 0 or w_p < 0 or (w_r == 0 and w_p == 0):
            raise ValueError(f"weights must be nonnegative and not both zero, got {self.w}")
        if not (0 < self.kappa_q <= 1 and 0 < self.kappa_r <= 1):
            raise ValueError("learning rates must lie in (0, 1]")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.exploration_set not in (EXPLORE_BY_VALUE, EXPLORE_BY_FLAG):
            raise ValueError(f"unknown exploration_set {self.exploration_set!r}")

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    def epsilon_at(self, t: int) -> float:
        return self.epsilon if self.epsilon_schedule is None else self.epsilon_schedule(t)


def baseline_mode(params: LearnParams) -> LearnParams:
    """Conventional single-objective R-learning: throughput weight only."""
    return replace(params, w=(1.0, 0.0))


class AgentTables:
    """Stored states, the two action-value tables and the average reward.

    Rows are appended as new states are discovered; the three per-state
    arrays always have one row per stored state.
    """

    def __init__(self, num_actions: int, initial_state, q0=(0.0, 0.0), capacity: int = 16):
        initial_state = np.asarray(initial_state, dtype=float)
        self.num_actions = int(num_actions)
        self.q0 = np.asarray(q0, dtype=float)
        self._states = np.zeros((capacity, initial_state.size))
        self._norms = np.zeros(capacity)
        self._q = np.zeros((capacity, self.num_actions, 2))
        self._explored = np.zeros((capacity, self.num_actions), dtype=bool)
        self.avg_reward = np.zeros(2)
        self.num_states = 0
        self.add_state(initial_state)

    @property
    def states(self) -> np.ndarray:
        return self._states[: self.num_states]

    @property
    def q(self) -> np.ndarray:
        """``(S, A, 2)`` action values; last axis is (throughput, energy)."""
        return self._q[: self.num_states]

    @property
    def table_r(self) -> np.ndarray:
        return self._q[: self.num_states, :, 0]

    @property
    def table_p(self) -> np.ndarray:
        return self._q[: self.num_states, :, 1]

    @property
    def explored(self) -> np.ndarray:
        return self._explored[: self.num_states]

    def add_state(self, state) -> int:
        if self.num_states == len(self._states):
            self._grow()
        idx = self.num_states
        self._states[idx] = state
        self._norms[idx] = np.linalg.norm(state)
        self._q[idx] = self.q0
        self._explored[idx] = False
        self.num_states += 1
        return idx

    def _grow(self):
        cap = 2 * len(self._states)
        self._states = _resized(self._states, cap)
        self._norms = _resized(self._norms, cap)
        self._q = _resized(self._q, cap)
        self._explored = _resized(self._explored, cap)

    def state_distances(self, state) -> np.ndarray:
        """Relative distance ``|s - s_k| / |s_k|`` to every stored state.

        A zero-norm stored state is at distance 0 from a zero vector and
        infinitely far from anything else.
        """
        state = np.asarray(state, dtype=float)
        diff = np.linalg.norm(self.states - state, axis=1)
        norms = self._norms[: self.num_states]
        out = np.full(self.num_states, np.inf)
        nz = norms > 0
        out[nz] = diff[nz] / norms[nz]
        out[~nz & (diff == 0)] = 0.0
        return out

    def dumps(self) -> str:
        """Plain-text dump; ``AgentTables.loads`` restores it exactly."""
        buf = io.StringIO()
        S, A = self.num_states, self.num_actions
        buf.write("# morl_drc agent tables v1\n")
        buf.write(f"num_states {S}\nnum_actions {A}\nnum_freqs {self._states.shape[1]}\n")
        buf.write("q0 " + " ".join(repr(float(v)) for v in self.q0) + "\n")
        buf.write("avg_reward " + " ".join(repr(float(v)) for v in self.avg_reward) + "\n")
        for name, arr, fmt in (
            ("states", self.states, "%.17g"),
            ("table_r", self.table_r, "%.17g"),
            ("table_p", self.table_p, "%.17g"),
            ("explored", self.explored.astype(int), "%d"),
        ):
            buf.write(f"[{name}]\n")
            np.savetxt(buf, arr, fmt=fmt)
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "AgentTables":
        header, sections, current = {}, {}, None
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                current = line.strip("[]")
                sections[current] = []
            elif current is None:
                key, *vals = line.split()
                header[key] = vals
            else:
                sections[current].append(line)
        missing = {"num_states", "num_actions", "num_freqs", "q0", "avg_reward"} - header.keys()
        missing |= {"states", "table_r", "table_p", "explored"} - sections.keys()
        if missing:
            raise ValueError(f"table dump is missing {sorted(missing)}")
        S, A, M = (int(header[k][0]) for k in ("num_states", "num_actions", "num_freqs"))

        def block(name, dtype, width):
            arr = np.array([[float(v) for v in row.split()] for row in sections[name]])
            arr = arr.reshape(S, width).astype(dtype)
            return arr

        states = block("states", float, M)
        tables = cls(A, states[0], q0=[float(v) for v in header["q0"]], capacity=max(S, 1))
        for s in states[1:]:
            tables.add_state(s)
        tables._q[:S, :, 0] = block("table_r", float, A)
        tables._q[:S, :, 1] = block("table_p", float, A)
        tables._explored[:S] = block("explored", float, A) != 0
        tables.avg_reward = np.array([float(v) for v in header["avg_reward"]])
        return tables


def _resized(arr: np.ndarray, rows: int) -> np.ndarray:
    out = np.zeros((rows,) + arr.shape[1:], dtype=arr.dtype)
    out[: len(arr)] = arr
    return out


def match_or_add_state(tables: AgentTables, state, eta: float) -> int:
    """Index of the nearest stored state within ``eta``, else a new row.

    Ties on distance go to the lowest stored index.
    """
    dist = tables.state_distances(state)
    best = int(np.argmin(dist))
    if dist[best] <= eta:
        return best
    return tables.add_state(state)


def greedy_action(tables: AgentTables, s_idx: int, w: np.ndarray) -> int:
    """argmax of ``w . q(s, .)``; the lowest action index wins ties."""
    return int(np.argmax(tables._q[s_idx] @ w))


def exploration_set(tables: AgentTables, s_idx: int, params: LearnParams) -> np.ndarray:
    """Indices of the actions still considered untried in state ``s_idx``."""
    if params.exploration_set == EXPLORE_BY_FLAG:
        return np.flatnonzero(~tables._explored[s_idx])
    w = params.weights
    return np.flatnonzero(tables._q[s_idx] @ w == tables.q0 @ w)


def select_action(
    tables: AgentTables, s_idx: int, params: LearnParams, rng: np.random.Generator, t: int = 0
) -> tuple[int, bool]:
    """Pick an action for state ``s_idx``.

    With probability ``1 - epsilon`` act greedily on the scalarized values;
    otherwise draw uniformly from the untried actions of this state.  When
    nothing is untried the greedy choice is used.  The flag returned is True
    when the greedy branch produced the action.
    """
    if rng.random() >= params.epsilon_at(t):
        return greedy_action(tables, s_idx, params.weights), True
    candidates = exploration_set(tables, s_idx, params)
    if len(candidates) == 0:
        return greedy_action(tables, s_idx, params.weights), True
    return int(candidates[rng.integers(len(candidates))]), False


def update_q(tables, s_idx, a_idx, reward, s_next_idx, params: LearnParams):
    """Relative action-value update for both objectives.

    Returns ``(q_sa, q_next)``, the pre-update value of ``(s, a)`` and the
    value of the greedy action in the next state, both as 2-vectors.
    """
    w = params.weights
    q_next = tables._q[s_next_idx, greedy_action(tables, s_next_idx, w)].copy()
    q_sa = tables._q[s_idx, a_idx].copy()
    r = np.asarray(reward, dtype=float)
    k = params.kappa_q
    tables._q[s_idx, a_idx] = q_sa * (1 - k) + k * (r - tables.avg_reward + q_next)
    tables._explored[s_idx, a_idx] = True
    return q_sa, q_next


def update_avg_reward(
    tables, s_idx, a_idx, reward, s_next_idx, params: LearnParams, greedy: bool,
    q_sa=None, q_next=None,
):
    """Average-reward update, applied only to greedily chosen actions.

    ``q_sa`` and ``q_next`` default to the current table contents; pass
    the values returned by :func:`update_q` to use pre-update estimates.
    """
    if not greedy:
        return
    if q_next is None:
        q_next = tables._q[s_next_idx, greedy_action(tables, s_next_idx, params.weights)]
    if q_sa is None:
        q_sa = tables._q[s_idx, a_idx]
    r = np.asarray(reward, dtype=float)
    k = params.kappa_r
    tables.avg_reward = tables.avg_reward * (1 - k) + k * (r + q_next - q_sa)


class MiniSlotOutcome(NamedTuple):
    action: int
    reward: tuple[int, int]
    errors: np.ndarray
    greedy: bool


class MORLAgent:
    """Learner for a single mini-slot."""

    def __init__(
        self,
        actions: Sequence[ResourceAction],
        initial_powers,
        params: LearnParams,
        quantizer: QuantizerConfig,
        rng: np.random.Generator,
    ):
        self.actions = list(actions)
        self.params = params
        self.quantizer = quantizer
        self.rng = rng
        self.tables = AgentTables(len(self.actions), quantize(initial_powers, quantizer), params.q0)
        self.state_idx = 0

    def act(self, t: int = 0) -> tuple[int, bool]:
        return select_action(self.tables, self.state_idx, self.params, self.rng, t)

    def observe(self, a_idx: int, reward, powers, greedy: bool) -> int:
        """Learn from one transition and move to the observed state."""
        s_next = match_or_add_state(self.tables, quantize(powers, self.quantizer), self.params.eta)
        q_sa, q_next = update_q(self.tables, self.state_idx, a_idx, reward, s_next, self.params)
        update_avg_reward(
            self.tables, self.state_idx, a_idx, reward, s_next, self.params, greedy,
            q_sa=q_sa, q_next=q_next,
        )
        self.state_idx = s_next
        return s_next


def run_timeslot(agents: Sequence[MORLAgent], env, t: int, env_rngs) -> list[MiniSlotOutcome]:
    """Advance every mini-slot agent by one timeslot.

    ``env_rngs[n]`` drives the channel draws of mini-slot ``n``.  The
    mini-slots do not interact, so stepping them in order is equivalent to
    stepping them side by side.
    """
    out = []
    for n, agent in enumerate(agents):
        a_idx, greedy = agent.act(t)
        reward, powers, errors = env.step_minislot(agent.actions[a_idx], n, t, env_rngs[n])
        agent.observe(a_idx, reward, powers, greedy)
        out.append(MiniSlotOutcome(a_idx, tuple(reward), errors, greedy))
    return out

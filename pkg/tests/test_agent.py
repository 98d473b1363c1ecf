import numpy as np
import pytest

from morl_drc.agent import (
    AgentTables,
    LearnParams,
    MORLAgent,
    QuantizerConfig,
    baseline_mode,
    exploration_set,
    greedy_action,
    match_or_add_state,
    quantize,
    run_timeslot,
    select_action,
    update_avg_reward,
    update_q,
)
from morl_drc.grid import GridDims, enumerate_actions
from morl_drc.radio import ChannelKind, ChannelModel, GrantFreeEnv, observe_powers

DIMS = GridDims()
ACTIONS = enumerate_actions(DIMS)
A = len(ACTIONS)
Q5 = QuantizerConfig(step_db=5.0, levels=8, reference_power=0.01)


class FixedRng:
    """Stand-in generator returning scripted draws."""

    def __init__(self, uniform, index=0):
        self.uniform, self.index = uniform, index
        self.bounds = []

    def random(self):
        return self.uniform

    def integers(self, high):
        self.bounds.append(high)
        return self.index


# --- quantizer ------------------------------------------------------------


def test_quantize_examples():
    assert quantize([0.01] * 6, Q5).tolist() == [0] * 6
    # 10 log10(21) = 13.2 dB -> 2.64 bins; 10 log10(11) = 10.4 dB -> 2.08 bins
    assert quantize([0.21, 0.11, 0.31, 0.01, 0.01, 0.01], Q5).tolist() == [3, 2, 3, 0, 0, 0]


def test_quantize_clamps_and_rounds_half_up():
    cfg = QuantizerConfig(step_db=10.0, levels=3, reference_power=1.0)
    # 5 dB sits exactly halfway between bins 0 and 1
    assert quantize([10 ** 0.5, 1e6, 0.5], cfg).tolist() == [1, 2, 0]


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-0.1, 0.2]])
def test_quantize_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        quantize(bad, Q5)


# --- state discovery --------------------------------------------------------


def test_identical_state_matches_without_growth():
    tables = AgentTables(A, [3, 0, 0, 0, 0, 0])
    assert match_or_add_state(tables, [3, 0, 0, 0, 0, 0], 0.1) == 0
    assert tables.num_states == 1


def test_zero_bootstrap_then_first_distinct_state():
    tables = AgentTables(A, np.zeros(6))
    assert match_or_add_state(tables, np.zeros(6), 0.1) == 0
    assert match_or_add_state(tables, [3, 0, 0, 0, 0, 0], 0.1) == 1
    assert tables.num_states == 2
    assert tables.table_r.shape == tables.table_p.shape == tables.explored.shape == (2, A)


def test_zero_norm_stored_state_is_infinitely_far_from_nonzero():
    tables = AgentTables(A, np.zeros(6))
    # even with a huge threshold the zero state cannot absorb a nonzero one
    assert match_or_add_state(tables, [1, 0, 0, 0, 0, 0], 1e9) == 1


def test_relative_distance_threshold():
    tables = AgentTables(A, [3, 4, 0, 0, 0, 0])  # norm 5
    assert match_or_add_state(tables, [3, 4, 0, 0, 0, 0.5], 0.1) == 0  # 0.5 / 5 = 0.1
    assert match_or_add_state(tables, [3, 4, 0, 0, 0, 0.6], 0.1) == 1


def test_nearest_match_ties_to_lowest_index():
    tables = AgentTables(A, [2, 0, 0, 0, 0, 0])
    tables.add_state([0, 2, 0, 0, 0, 0])
    # equidistant (relative 0.5 * sqrt(2)) from both stored states
    assert match_or_add_state(tables, [1, 1, 0, 0, 0, 0], 1.0) == 0


def test_nearest_within_threshold_wins():
    tables = AgentTables(A, [4, 0, 0, 0, 0, 0])
    tables.add_state([4, 1, 0, 0, 0, 0])
    assert match_or_add_state(tables, [4, 1, 0, 0, 0, 0], 0.5) == 1


def test_new_rows_start_at_q0_unexplored():
    tables = AgentTables(A, np.zeros(6), q0=(0.5, -0.25))
    tables.add_state(np.ones(6))
    assert (tables.table_r == 0.5).all() and (tables.table_p == -0.25).all()
    assert not tables.explored.any()


def test_table_shape_invariant_under_random_operations():
    rng = np.random.default_rng(7)
    params = LearnParams(kappa_q=0.3, kappa_r=0.2)
    tables = AgentTables(A, np.zeros(6), capacity=1)
    s = 0
    for _ in range(100_000):
        if rng.random() < 0.5:
            s = match_or_add_state(tables, rng.integers(0, 4, 6), rng.choice([0.0, 0.3, 2.0]))
        else:
            nxt = int(rng.integers(tables.num_states))
            a = int(rng.integers(A))
            r = (int(rng.integers(3)), -int(rng.integers(3)))
            q_sa, q_next = update_q(tables, s, a, r, nxt, params)
            update_avg_reward(tables, s, a, r, nxt, params, bool(rng.random() < 0.5), q_sa, q_next)
            s = nxt
        S = tables.num_states
        assert len(tables.states) == tables.table_r.shape[0] == tables.table_p.shape[0] == S
        assert tables.explored.shape == (S, A)


# --- action selection ---------------------------------------------------------


def test_fresh_state_explores_uniformly_over_all_actions():
    tables = AgentTables(A, np.zeros(6))
    for mode in ("value", "flag"):
        rng = FixedRng(0.05, index=17)
        a, greedy = select_action(tables, 0, LearnParams(exploration_set=mode), rng)
        assert (a, greedy) == (17, False)
        assert rng.bounds == [A]


def test_greedy_branch_picks_unique_maximum():
    tables = AgentTables(A, np.zeros(6))
    tables._q[0, 12] = (1.0, -1.0)
    assert select_action(tables, 0, LearnParams(), FixedRng(0.1)) == (12, True)


def test_greedy_ties_go_to_idle_action():
    tables = AgentTables(A, np.zeros(6))
    assert ACTIONS[0].freqs == (None, None)
    assert select_action(tables, 0, LearnParams(), FixedRng(0.99)) == (0, True)


@pytest.mark.parametrize("mode", ["value", "flag"])
def test_empty_exploration_set_falls_back_to_greedy(mode):
    tables = AgentTables(A, np.zeros(6))
    tables._q[0] = np.linspace(-1, 1, A)[:, None] * [1.0, 0.0] + [0.0, -0.5]
    tables._explored[0] = True
    rng = FixedRng(0.0)
    assert select_action(tables, 0, LearnParams(exploration_set=mode), rng) == (A - 1, True)
    assert rng.bounds == []


def test_exploration_never_returns_explored_action_flag_mode():
    params = LearnParams(exploration_set="flag")
    rng = np.random.default_rng(0)
    tables = AgentTables(A, np.zeros(6))
    for _ in range(A):
        before = tables.explored[0].copy()
        a, greedy = select_action(tables, 0, LearnParams(epsilon=0.999999, exploration_set="flag"), rng)
        assert not greedy and not before[a]
        update_q(tables, 0, a, (1, -1), 0, params)
    assert tables.explored[0].all()


def test_value_mode_set_tracks_scalarized_initial_value():
    params = LearnParams(w=(1.0, 0.5))
    tables = AgentTables(A, np.zeros(6))
    tables._q[0, 3] = (0.5, -1.0)  # scalarizes back to w . q0 = 0
    tables._q[0, 4] = (0.5, 0.0)
    assert 3 in exploration_set(tables, 0, params)
    assert 4 not in exploration_set(tables, 0, params)
    assert len(exploration_set(tables, 0, params)) == A - 1


def test_argmax_invariant_under_positive_rescaling():
    rng = np.random.default_rng(99)
    tables = AgentTables(A, np.zeros(6))
    for _ in range(200):
        tables._q[0] = rng.normal(size=(A, 2))
        w = rng.uniform(0, 2, size=2)
        ref = greedy_action(tables, 0, w)
        for c in (1e-3, 0.37, 2.0, 5.5, 1e3):
            assert greedy_action(tables, 0, c * w) == ref
    tables._q[0] = 0.0
    assert greedy_action(tables, 0, np.array([7.0, 3.0])) == 0


# --- value updates ------------------------------------------------------------


def test_update_q_single_step_example():
    tables = AgentTables(A, np.zeros(6))
    update_q(tables, 0, 5, (1, -1), 0, LearnParams(kappa_q=0.1))
    np.testing.assert_allclose(tables.q[0, 5], [0.1, -0.1])
    assert tables.explored[0, 5] and tables.explored[0].sum() == 1


def test_update_q_full_overwrite():
    tables = AgentTables(A, np.zeros(6))
    tables.add_state(np.ones(6))
    tables._q[1, 9] = (2.0, -0.5)  # greedy in the next state under w=(1, 0.5)
    tables._q[0, 4] = (7.0, 7.0)
    update_q(tables, 0, 4, (1, -2), 1, LearnParams(kappa_q=1.0))
    np.testing.assert_allclose(tables.q[0, 4], [3.0, -2.5])


def test_update_q_fixed_point():
    tables = AgentTables(A, np.zeros(6))
    tables._q[0] = -1.0
    tables._q[0, 2] = (0.75, -0.25)
    tables.avg_reward = np.array([1.0, -1.0])
    before = tables.q.copy()
    update_q(tables, 0, 2, (1, -1), 0, LearnParams(kappa_q=0.5))  # dyadic: exact
    np.testing.assert_array_equal(tables.q, before)


def test_avg_reward_examples():
    params = LearnParams(kappa_r=0.5)
    tables = AgentTables(A, np.zeros(6))
    update_avg_reward(tables, 0, 1, (2, -2), 0, params, greedy=False)
    assert tables.avg_reward.tolist() == [0.0, 0.0]
    update_avg_reward(tables, 0, 1, (2, -2), 0, params, greedy=True)
    np.testing.assert_allclose(tables.avg_reward, [1.0, -1.0])


def test_avg_reward_fixed_point():
    tables = AgentTables(A, np.zeros(6))
    tables.avg_reward = np.array([2.0, -1.0])
    update_avg_reward(tables, 0, 0, (2, -1), 0, LearnParams(kappa_r=0.4), greedy=True)
    np.testing.assert_array_equal(tables.avg_reward, [2.0, -1.0])


def reference_step(q_sa, q_next, r, rbar, kq, kr, greedy):
    """Scalar transcription of both update rules, one objective at a time."""
    new_q = []
    new_rbar = []
    for k in range(2):
        new_q.append(q_sa[k] * (1 - kq) + kq * (r[k] - rbar[k] + q_next[k]))
        if greedy:
            new_rbar.append(rbar[k] * (1 - kr) + kr * (r[k] + q_next[k] - q_sa[k]))
        else:
            new_rbar.append(rbar[k])
    return new_q, new_rbar


def test_updates_match_scalar_reference():
    rng = np.random.default_rng(2023)
    for _ in range(1000):
        w = tuple(rng.uniform(0, 1, 2) + (0.01, 0.0))
        params = LearnParams(w=w, kappa_q=rng.uniform(0.01, 1), kappa_r=rng.uniform(0.01, 1))
        tables = AgentTables(A, np.zeros(6))
        tables.add_state(np.ones(6))
        tables._q[:2] = rng.normal(scale=5, size=(2, A, 2))
        tables.avg_reward = rng.normal(size=2)
        s, s_next = int(rng.integers(2)), int(rng.integers(2))
        a = int(rng.integers(A))
        r = (int(rng.integers(3)), -int(rng.integers(3)))
        greedy = bool(rng.random() < 0.5)

        scores = [w[0] * tables._q[s_next, b, 0] + w[1] * tables._q[s_next, b, 1] for b in range(A)]
        star = max(range(A), key=lambda b: (scores[b], -b))
        exp_q, exp_rbar = reference_step(
            list(tables._q[s, a]), list(tables._q[s_next, star]), r,
            list(tables.avg_reward), params.kappa_q, params.kappa_r, greedy,
        )

        q_sa, q_next = update_q(tables, s, a, r, s_next, params)
        update_avg_reward(tables, s, a, r, s_next, params, greedy, q_sa, q_next)
        np.testing.assert_allclose(tables.q[s, a], exp_q, rtol=0, atol=1e-12)
        np.testing.assert_allclose(tables.avg_reward, exp_rbar, rtol=0, atol=1e-12)


# --- baseline ---------------------------------------------------------------


def test_baseline_mode_drops_energy_weight():
    params = baseline_mode(LearnParams(w=(1.0, 0.5), kappa_q=0.2))
    assert params.w == (1.0, 0.0) and params.kappa_q == 0.2


def test_baseline_ignores_energy_table():
    params = baseline_mode(LearnParams())
    tables = AgentTables(A, np.zeros(6))
    tables._q[0, :, 1] = np.arange(A)  # would dominate if weighted
    tables._q[0, 6, 0] = 0.1
    assert greedy_action(tables, 0, params.weights) == 6


class ScalarRLearner:
    """Independent single-objective R-learner used as the degeneracy oracle."""

    def __init__(self, num_actions, initial_state, kq, kr, eps, eta, quant, rng):
        self.kq, self.kr, self.eps, self.eta, self.quant, self.rng = kq, kr, eps, eta, quant, rng
        self.states = [np.asarray(initial_state, dtype=float)]
        self.q = [[0.0] * num_actions]
        self.rbar = 0.0
        self.s = 0

    def bin(self, powers):
        out = []
        for p in powers:
            level = np.floor(10 * np.log10(p / self.quant.reference_power) / self.quant.step_db + 0.5)
            out.append(min(max(level, 0), self.quant.levels - 1))
        return np.array(out)

    def argmax(self, s):
        row = self.q[s]
        best = 0
        for a in range(1, len(row)):
            if row[a] > row[best]:
                best = a
        return best

    def act(self):
        if self.rng.random() >= self.eps:
            return self.argmax(self.s), True
        untried = [a for a, v in enumerate(self.q[self.s]) if v == 0.0]
        if not untried:
            return self.argmax(self.s), True
        return untried[self.rng.integers(len(untried))], False

    def locate(self, state):
        best, best_d = None, np.inf
        for k, ref in enumerate(self.states):
            norm = np.sqrt(np.sum(ref ** 2))
            gap = np.sqrt(np.sum((state - ref) ** 2))
            d = gap / norm if norm > 0 else (0.0 if gap == 0 else np.inf)
            if d < best_d:
                best, best_d = k, d
        if best_d <= self.eta:
            return best
        self.states.append(state)
        self.q.append([0.0] * len(self.q[0]))
        return len(self.states) - 1

    def observe(self, a, reward, powers, greedy):
        nxt = self.locate(self.bin(powers))
        q_sa = self.q[self.s][a]
        q_next = self.q[nxt][self.argmax(nxt)]
        self.q[self.s][a] = q_sa * (1 - self.kq) + self.kq * (reward - self.rbar + q_next)
        if greedy:
            self.rbar = self.rbar * (1 - self.kr) + self.kr * (reward + q_next - q_sa)
        self.s = nxt


@pytest.mark.parametrize("kind,eta", [("los", 0.1), ("rayleigh", 0.1), ("rayleigh", 1.0)])
def test_baseline_is_scalar_r_learning(kind, eta):
    env = GrantFreeEnv(DIMS, channel=ChannelModel(ChannelKind(kind)))
    params = baseline_mode(LearnParams(eta=eta, kappa_q=0.2, kappa_r=0.1, epsilon=0.3))
    for n in range(DIMS.num_minislots):
        agent = MORLAgent(ACTIONS, env.idle_powers(), params, Q5, np.random.default_rng(n))
        ref = ScalarRLearner(A, quantize(env.idle_powers(), Q5), 0.2, 0.1, 0.3, eta, Q5,
                             np.random.default_rng(n))
        env_a, env_b = np.random.default_rng(100 + n), np.random.default_rng(100 + n)
        for t in range(400):
            a, greedy = agent.act(t)
            b, ref_greedy = ref.act()
            assert (a, greedy) == (b, ref_greedy), f"mini-slot {n}, timeslot {t}"
            reward, powers, _ = env.step_minislot(ACTIONS[a], n, t, env_a)
            env.step_minislot(ACTIONS[b], n, t, env_b)
            agent.observe(a, reward, powers, greedy)
            ref.observe(b, reward.throughput, powers, ref_greedy)
        assert agent.tables.table_r.tolist() == ref.q
        assert agent.tables.avg_reward[0] == ref.rbar


# --- whole-timeslot behaviour ------------------------------------------------


def make_agents(params, seed=0):
    env = GrantFreeEnv(DIMS)
    root = np.random.SeedSequence(seed)
    agents = [
        MORLAgent(ACTIONS, env.idle_powers(), params, Q5, np.random.default_rng(ss))
        for ss in root.spawn(DIMS.num_minislots)
    ]
    return env, agents


def test_first_timeslot_grows_each_agent_by_at_most_one_row():
    env, agents = make_agents(LearnParams())
    run_timeslot(agents, env, 0, [None] * DIMS.num_minislots)
    assert all(1 <= ag.tables.num_states <= 2 for ag in agents)


def reachable_states(n):
    env = GrantFreeEnv(DIMS)
    beta = env.pattern.slice(0, n)
    h, g = np.ones((2, 6)), np.ones((1, 6))
    return {tuple(quantize(observe_powers(a, h, g, beta, env.phy), Q5)) for a in ACTIONS}


def test_los_state_count_bounded_by_reachable_set():
    env, agents = make_agents(LearnParams())
    for t in range(1500):
        run_timeslot(agents, env, t, [None] * DIMS.num_minislots)
    counts = [ag.tables.num_states for ag in agents]
    for t in range(1500, 2000):
        run_timeslot(agents, env, t, [None] * DIMS.num_minislots)
    for n, ag in enumerate(agents):
        # the bootstrap all-noise reading is never produced by the jammed grid
        assert ag.tables.num_states <= len(reachable_states(n)) + 1
    assert [ag.tables.num_states for ag in agents] == counts


@pytest.mark.parametrize("mode", ["value", "flag"])
def test_jammed_minislot_learns_to_stay_idle(mode):
    params = LearnParams(exploration_set=mode)
    env, agents = make_agents(params, seed=3)
    last = agents[-1]
    t = 0
    while len(exploration_set(last.tables, last.state_idx, params)) > (mode == "value") and t < 20000:
        run_timeslot(agents, env, t, [None] * DIMS.num_minislots)
        t += 1
    for _ in range(500):
        run_timeslot(agents, env, t, [None] * DIMS.num_minislots)
        t += 1
    assert greedy_action(last.tables, last.state_idx, params.weights) == 0


# --- table dumps ------------------------------------------------------------


def test_table_dump_round_trip():
    env, agents = make_agents(LearnParams())
    for t in range(300):
        run_timeslot(agents, env, t, [None] * DIMS.num_minislots)
    for ag in agents:
        text = ag.tables.dumps()
        back = AgentTables.loads(text)
        np.testing.assert_array_equal(back.states, ag.tables.states)
        np.testing.assert_array_equal(back.q, ag.tables.q)
        np.testing.assert_array_equal(back.explored, ag.tables.explored)
        np.testing.assert_array_equal(back.avg_reward, ag.tables.avg_reward)
        assert back.dumps() == text


def test_table_dump_missing_section():
    text = AgentTables(A, np.zeros(6)).dumps()
    with pytest.raises(ValueError, match="explored"):
        AgentTables.loads(text.split("[explored]")[0])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(w=(0.0, 0.0)),
        dict(w=(-1.0, 0.5)),
        dict(kappa_q=0.0),
        dict(kappa_r=1.5),
        dict(epsilon=1.0),
        dict(eta=-0.1),
        dict(exploration_set="random"),
    ],
)
def test_invalid_learn_params(kwargs):
    with pytest.raises(ValueError):
        LearnParams(**kwargs)

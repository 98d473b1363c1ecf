"""Seeded runs, CSV persistence, checkpoints and plot-script emission.

Output layout for one scenario::

    <out>/config.ini                 resolved config, defaults expanded
    <out>/seed_<s>_trace.csv         one row per timeslot (TRACE_COLUMNS)
    <out>/seed_<s>_agents.csv        per-agent estimates, moving averages
    <out>/tables/seed_<s>/agent_<n>.txt   final lookup-table dumps
    <out>/summary.csv                final values per seed
    <out>/checkpoints/seed_<s>/      present only while a seed is unfinished
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import AgentTables, MORLAgent, run_timeslot
from .config import ScenarioConfig, dump_config, load_config, with_weights
from .grid import enumerate_actions
from .metrics import (
    MINISLOT,
    TIMESLOT,
    TRACE_COLUMNS,
    RunTrace,
    agents_to_csv,
    avg_der,
    record_timeslot,
    trace_from_csv,
    trace_to_csv,
)
from .radio import GrantFreeEnv

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("seed", "timeslots", "Rbar", "Pbar", "der_minislot", "der_timeslot")


@dataclass
class RunArtifact:
    config: ScenarioConfig
    out_dir: Path | None
    traces: dict[int, RunTrace] = field(default_factory=dict)

    def summary_rows(self):
        for seed, trace in sorted(self.traces.items()):
            final = trace.rbar_sums()[-1]
            yield (
                seed,
                len(trace),
                repr(float(final[0])),
                repr(float(final[1])),
                repr(avg_der(trace, MINISLOT)),
                repr(avg_der(trace, TIMESLOT)),
            )

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(self.summary_rows())
        return buf.getvalue()


class SeedRun:
    """Environment, agents and RNG streams of one seed."""

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.env = GrantFreeEnv(cfg.dims, cfg.phy, cfg.channel, cfg.pattern, cfg.sinr_denominator)
        actions = enumerate_actions(cfg.dims)
        N = cfg.dims.num_minislots
        agent_ss, env_ss = np.random.SeedSequence(seed).spawn(2)
        self.agent_rngs = [np.random.default_rng(s) for s in agent_ss.spawn(N)]
        self.env_rngs = [np.random.default_rng(s) for s in env_ss.spawn(N)]
        self.agents = [
            MORLAgent(actions, self.env.idle_powers(), cfg.learn, cfg.quantizer, self.agent_rngs[n])
            for n in range(N)
        ]
        self.trace = RunTrace(N)
        self.t = 0

    def step(self):
        outcomes = run_timeslot(self.agents, self.env, self.t, self.env_rngs)
        record_timeslot(
            self.trace,
            [o.errors for o in outcomes],
            [o.reward for o in outcomes],
            [a.tables.avg_reward for a in self.agents],
        )
        self.t += 1
        return outcomes

    def converged(self) -> bool:
        """Scalarized summed estimate moved less than ``stop_tol`` over the window."""
        cfg = self.cfg
        if cfg.stop_tol <= 0 or self.t <= cfg.stop_window:
            return False
        w = cfg.learn.weights
        sums = self.trace.rbar
        now = np.asarray(sums[-1]).sum(axis=0) @ w
        then = np.asarray(sums[-1 - cfg.stop_window]).sum(axis=0) @ w
        return abs(now - then) < cfg.stop_tol

    def run(self, horizon: int | None = None, checkpoint_dir: Path | None = None) -> RunTrace:
        horizon = self.cfg.horizon if horizon is None else horizon
        every = self.cfg.checkpoint_every
        while self.t < horizon:
            self.step()
            if self.converged():
                log.info("seed %d converged at t=%d", self.seed, self.t)
                break
            if checkpoint_dir is not None and every and self.t % every == 0 and self.t < horizon:
                self.save_checkpoint(checkpoint_dir)
        return self.trace

    def save_checkpoint(self, path: Path):
        """Write tables, RNG states and the partial trace; atomically replaces ``path``."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        for n, agent in enumerate(self.agents):
            (tmp / f"agent_{n}.txt").write_text(agent.tables.dumps())
        meta = {
            "t": self.t,
            "seed": self.seed,
            "state_idx": [a.state_idx for a in self.agents],
            "agent_rngs": [r.bit_generator.state for r in self.agent_rngs],
            "env_rngs": [r.bit_generator.state for r in self.env_rngs],
        }
        (tmp / "meta.json").write_text(json.dumps(meta))
        tr = self.trace
        np.savez(
            tmp / "trace.npz",
            R=np.asarray(tr.R, dtype=np.int64),
            P=np.asarray(tr.P, dtype=np.int64),
            rbar=np.asarray(tr.rbar, dtype=float).reshape(len(tr), -1, 2),
            rewards=np.asarray(tr.rewards, dtype=np.int64).reshape(len(tr), -1, 2),
            err_count=np.asarray(tr.err_count, dtype=np.int64),
            err_bits=np.asarray(tr.err_bits, dtype=np.int64),
            cum_ms=np.asarray(tr._cum_minislots, dtype=np.int64),
            cum_ts=np.asarray(tr._cum_timeslots, dtype=np.int64),
        )
        if path.exists():
            shutil.rmtree(path)
        tmp.rename(path)

    @classmethod
    def from_checkpoint(cls, cfg: ScenarioConfig, path: Path) -> "SeedRun":
        path = Path(path)
        meta = json.loads((path / "meta.json").read_text())
        run = cls(cfg, meta["seed"])
        run.t = meta["t"]
        for n, agent in enumerate(run.agents):
            agent.tables = AgentTables.loads((path / f"agent_{n}.txt").read_text())
            agent.state_idx = meta["state_idx"][n]
        for rng, state in zip(run.agent_rngs, meta["agent_rngs"]):
            rng.bit_generator.state = state
        for rng, state in zip(run.env_rngs, meta["env_rngs"]):
            rng.bit_generator.state = state
        with np.load(path / "trace.npz") as z:
            tr = run.trace
            tr.R = [int(v) for v in z["R"]]
            tr.P = [int(v) for v in z["P"]]
            tr.rbar = list(z["rbar"])
            tr.rewards = list(z["rewards"])
            tr.err_count = [int(v) for v in z["err_count"]]
            tr.err_bits = [int(v) for v in z["err_bits"]]
            tr._cum_minislots = [int(v) for v in z["cum_ms"]]
            tr._cum_timeslots = [int(v) for v in z["cum_ts"]]
            tr.erroneous_minislots = tr._cum_minislots[-1] if tr._cum_minislots else 0
            tr.erroneous_timeslots = tr._cum_timeslots[-1] if tr._cum_timeslots else 0
        return run


def run_seed(cfg: ScenarioConfig, seed: int, out_dir: Path | None = None, resume: bool = False) -> RunTrace:
    """Run one seed to the horizon, writing its CSVs when ``out_dir`` is set."""
    ckpt = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        ckpt = out_dir / "checkpoints" / f"seed_{seed}"
    if resume and ckpt is not None and (ckpt / "meta.json").is_file():
        run = SeedRun.from_checkpoint(cfg, ckpt)
        log.info("seed %d resumed at t=%d", seed, run.t)
    else:
        run = SeedRun(cfg, seed)
    trace = run.run(checkpoint_dir=ckpt)
    if out_dir is not None:
        (out_dir / f"seed_{seed}_trace.csv").write_text(trace_to_csv(trace))
        (out_dir / f"seed_{seed}_agents.csv").write_text(agents_to_csv(trace))
        tdir = out_dir / "tables" / f"seed_{seed}"
        tdir.mkdir(parents=True, exist_ok=True)
        for n, agent in enumerate(run.agents):
            (tdir / f"agent_{n + 1}.txt").write_text(agent.tables.dumps())
        if ckpt.exists():
            shutil.rmtree(ckpt)
    return trace


def _run_seed_job(args):
    return run_seed(*args)


def run_experiment(
    cfg: ScenarioConfig,
    out_dir: str | os.PathLike | None = None,
    resume: bool = False,
    workers: int = 1,
) -> RunArtifact:
    """Run every seed of ``cfg``.

    With ``out_dir`` set, the resolved config, per-seed CSVs and the summary
    are written there.  A failed run keeps its checkpoints and can be
    continued with ``resume=True``.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(dump_config(cfg))
    artifact = RunArtifact(cfg, out)
    jobs = [(cfg, seed, out, resume) for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_seed_job, jobs))
    else:
        traces = [_run_seed_job(job) for job in jobs]
    artifact.traces = dict(zip(cfg.seeds, traces))
    if out is not None:
        (out / "summary.csv").write_text(artifact.summary_csv())
    return artifact


def run_sweep(cfg: ScenarioConfig, w_p_values, out_dir=None, workers: int = 1) -> dict[float, RunArtifact]:
    """One experiment per energy weight, each in ``<out>/wp_<value>``."""
    results = {}
    for w_p in w_p_values:
        sub = None if out_dir is None else Path(out_dir) / f"wp_{w_p:g}"
        results[w_p] = run_experiment(with_weights(cfg, w_p), sub, workers=workers)
    return results


def load_artifact(out_dir: str | os.PathLike) -> RunArtifact:
    """Re-read a finished run directory."""
    out = Path(out_dir)
    cfg_path = out / "config.ini"
    if not cfg_path.is_file():
        raise FileNotFoundError(f"no config.ini in {out}")
    cfg = load_config(cfg_path)
    artifact = RunArtifact(cfg, out)
    for seed in cfg.seeds:
        path = out / f"seed_{seed}_trace.csv"
        if path.is_file():
            artifact.traces[seed] = trace_from_csv(path.read_text(), cfg.dims.num_minislots)
    return artifact


# figure family -> columns plotted against t
_CHARTS = {
    "reward": (("Rbar", "Pbar"), "Estimated average reward"),
    "errors": (("err_count",), "Decision errors per timeslot"),
    "der": (("der_minislot", "der_timeslot"), "Average DER"),
}
_FIGURE_CHARTS = {
    "fig2": ("reward",),
    "fig3": ("reward",),
    "fig4": ("errors",),
    "fig5": ("der",),
    "fig6": ("der",),
}

_SCRIPT_HEAD = '''"""Plots for run {name!r}.  Generated file; edit freely."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
SEEDS = {seeds!r}


def column(seed, name):
    with open(HERE / f"seed_{{seed}}_trace.csv", newline="") as fh:
        return [float(row[name]) for row in csv.DictReader(fh)]

'''

_SCRIPT_CHART = '''
fig, ax = plt.subplots()
for seed in SEEDS:
    t = column(seed, "t")
{series}ax.set_xlabel("timeslot")
ax.set_ylabel({ylabel!r})
ax.set_title({title!r})
ax.legend(fontsize="small")
fig.savefig(HERE / {png!r}, dpi=150)
'''


def emit_report(artifact: RunArtifact | str | os.PathLike, out_dir=None) -> dict[str, Path | str]:
    """Write ``plot.py`` (one chart per figure family) and ``summary.md``.

    Charts are not rendered here; run the emitted script to draw them.
    """
    if not isinstance(artifact, RunArtifact):
        artifact = load_artifact(artifact)
    out = Path(out_dir) if out_dir is not None else artifact.out_dir
    if out is None:
        raise ValueError("artifact has no output directory; pass out_dir")
    if not artifact.traces:
        raise ValueError("artifact contains no traces")
    for seed, trace in artifact.traces.items():
        if len(trace) == 0:
            raise ValueError(f"trace of seed {seed} is empty")
    for seed in artifact.traces:
        path = out / f"seed_{seed}_trace.csv"
        if path.is_file():
            header = path.read_text().split("\n", 1)[0].split(",")
            for col in TRACE_COLUMNS:
                if col not in header:
                    raise ValueError(f"{path.name} lacks column {col!r}")
        else:
            path.write_text(trace_to_csv(artifact.traces[seed]))

    name = artifact.config.name
    families = _FIGURE_CHARTS.get(name.split("-")[0], tuple(_CHARTS))
    script = _SCRIPT_HEAD.format(name=name, seeds=sorted(artifact.traces))
    for fam in families:
        cols, ylabel = _CHARTS[fam]
        series = "".join(
            f'    ax.plot(t, column(seed, "{c}"), label=f"{c} seed {{seed}}", lw=0.8)\n'
            for c in cols
        )
        script += _SCRIPT_CHART.format(
            series=series, ylabel=ylabel, title=f"{name}: {ylabel}", png=f"{name}_{fam}.png"
        )
    plot_path = out / "plot.py"
    plot_path.write_text(script)

    rows = list(artifact.summary_rows())
    table = ["| " + " | ".join(SUMMARY_COLUMNS) + " |", "|" + "---|" * len(SUMMARY_COLUMNS)]
    for row in rows:
        seed, T, R, P, ms, ts = row
        table.append(f"| {seed} | {T} | {float(R):.3f} | {float(P):.3f} | {float(ms):.4f} | {float(ts):.4f} |")
    arr = np.array([[float(v) for v in r[2:]] for r in rows])
    table.append(
        "| mean | | " + " | ".join(f"{v:.4f}" for v in arr.mean(axis=0)) + " |"
    )
    summary = f"# {name}\n\n" + "\n".join(table) + "\n"
    summary_path = out / "summary.md"
    summary_path.write_text(summary)
    return {"plot_script": plot_path, "summary": summary_path, "table": summary}

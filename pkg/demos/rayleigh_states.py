"""
Fading and the size of the state space
======================================

With Rayleigh fading the measured powers change every mini-slot, so nearly
every quantized reading is new unless the matching threshold is loose.
"""

import tempfile
from pathlib import Path

from morl_drc import AgentTables, load_config, run_experiment
from morl_drc.metrics import MINISLOT, TIMESLOT, avg_der

for eta in ("0.1", "0.5", "1.0"):
    cfg = load_config(
        "[channel]\nkind = rayleigh\n",
        overrides={"learning.eta": eta, "run.seeds": "0", "run.horizon": "4000"},
    )
    art = run_experiment(cfg)
    trace = art.traces[0]
    print(
        f"eta={eta}: DER {avg_der(trace, MINISLOT):.4f} / {avg_der(trace, TIMESLOT):.4f}"
    )

# State counts per agent for one run, read from a table dump written to disk.
out = Path(tempfile.mkdtemp())
run_experiment(load_config(preset="fig6", overrides={"run.seeds": "0", "run.horizon": "4000"}), out)
for n in range(1, 7):
    tables = AgentTables.loads((out / "tables" / "seed_0" / f"agent_{n}.txt").read_text())
    print(f"mini-slot {n}: {tables.num_states} states")

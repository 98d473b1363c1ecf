"""
Decision errors: weighted rewards versus throughput only
========================================================

A decision error is a device sent onto a cell the interferer also uses.
The conventional R-learner ignores energy, so nothing stops it from
transmitting into the last mini-slot, which is always fully jammed.
"""

import numpy as np

from morl_drc import load_config, run_experiment
from morl_drc.metrics import MINISLOT, TIMESLOT, avg_der

seeds = {"run.seeds": "0,1,2", "run.horizon": "3000"}
morl = run_experiment(load_config(preset="fig5", overrides=seeds))
base = run_experiment(load_config(preset="fig5-baseline", overrides=seeds))


def mean_der(art, level):
    return np.mean([avg_der(tr, level) for tr in art.traces.values()])


print(f"{'':10s}{'mini-slot':>12s}{'timeslot':>12s}")
for label, art in (("MORL", morl), ("baseline", base)):
    print(f"{label:10s}{mean_der(art, MINISLOT):12.4f}{mean_der(art, TIMESLOT):12.4f}")

# How often is the jammed mini-slot used at the end of the run?
for label, art in (("MORL", morl), ("baseline", base)):
    used = [tr.minislot_energy()[-500:, -1] > 0 for tr in art.traces.values()]
    print(f"{label}: last mini-slot used in {np.mean(used):.1%} of the final 500 timeslots")

# Errors per timeslot count devices, so a single timeslot can hold several.
counts = np.bincount(base.traces[0].err_count)
print("baseline error-count histogram:", dict(enumerate(counts.tolist())))

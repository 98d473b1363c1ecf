"""
Sweeping the energy weight
==========================

The action rule maximises ``w_R * q_R + w_P * q_P``.  Raising ``w_P``
makes idle blocks more attractive relative to decoded ones.
"""

import numpy as np

from morl_drc import load_config, run_sweep

cfg = load_config(overrides={"run.seeds": "0,1", "run.horizon": "2000"})
results = run_sweep(cfg, [0.0, 0.5, 0.93, 1.5])

print(f"{'w_P':>6s}{'Rbar':>9s}{'Pbar':>9s}")
for w_p, art in results.items():
    finals = np.array([tr.rbar_sums()[-1] for tr in art.traces.values()])
    R, P = finals.mean(axis=0)
    print(f"{w_p:6.2f}{R:9.3f}{P:9.3f}")

# With w_P above w_R a decoded block (+1, -1) scores below an idle one (0, 0).

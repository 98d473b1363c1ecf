"""
Bringing your own interference pattern
======================================

Patterns are plain text: a ``period = P`` line followed by ``P * N`` rows
of ``M`` zeros and ones.  Here the interferer alternates between two
layouts and jams the last mini-slot in every timeslot.
"""

import tempfile
from pathlib import Path

from morl_drc import AgentTables, load_config, load_pattern, run_experiment

PATTERN = """\
period = 2
# timeslot 1
1 1 0 0 0 0
0 0 1 1 0 0
0 0 0 0 1 1
1 0 0 0 0 1
1 1 1 1 1 1
# timeslot 2
0 0 0 0 1 1
1 1 0 0 0 0
0 0 1 1 0 0
0 1 1 0 0 0
1 1 1 1 1 1
"""

work = Path(tempfile.mkdtemp())
(work / "alternating.txt").write_text(PATTERN)
(work / "scenario.ini").write_text(
    "[scenario]\nname = alternating\n"
    "[grid]\nnum_minislots = 5\n"
    "[pattern]\nfile = alternating.txt\n"
    "[run]\nhorizon = 3000\nseeds = 0\n"
)

pattern = load_pattern(work / "alternating.txt")
print("period:", pattern.period, " ceiling:", pattern.throughput_ceiling(2))

cfg = load_config(work / "scenario.ini")
art = run_experiment(cfg, work / "out")
print((work / "out" / "summary.csv").read_text())

# Each agent's tables are dumped as text and can be reloaded for inspection.
tables = AgentTables.loads((work / "out" / "tables" / "seed_0" / "agent_1.txt").read_text())
print("agent 1 discovered", tables.num_states, "states")
print(tables.states.astype(int))

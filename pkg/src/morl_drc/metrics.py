"""Per-timeslot bookkeeping: rewards, average-reward estimates and DER."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

TRACE_COLUMNS = (
    "t",
    "R_t",
    "P_t",
    "Rbar",
    "Pbar",
    "err_count",
    "minislot_err_bits",
    "timeslot_err",
    "der_minislot",
    "der_timeslot",
)

MINISLOT = "minislot"
TIMESLOT = "timeslot"


@dataclass
class RunTrace:
    """Growing record of one run.

    ``P`` holds the energy used (a nonnegative block count); ``Pbar`` keeps
    the sign of the learned negative-energy average.
    """

    num_minislots: int
    R: list = field(default_factory=list)
    P: list = field(default_factory=list)
    rbar: list = field(default_factory=list)  # (N, 2) per-agent estimates
    rewards: list = field(default_factory=list)  # (N, 2) per-mini-slot rewards
    err_count: list = field(default_factory=list)
    err_bits: list = field(default_factory=list)
    # running totals, kept so avg_der is O(1) on the full trace
    erroneous_minislots: int = 0
    erroneous_timeslots: int = 0
    _cum_minislots: list = field(default_factory=list)
    _cum_timeslots: list = field(default_factory=list)

    def __len__(self):
        return len(self.R)

    def timeslot_err(self, t: int) -> bool:
        return self.err_bits[t] != 0

    def minislot_energy(self) -> np.ndarray:
        """``(T, N)`` resource blocks used per mini-slot."""
        if not self.rewards:
            return np.zeros((0, self.num_minislots), dtype=np.int64)
        return -np.asarray(self.rewards)[:, :, 1]

    def rbar_sums(self) -> np.ndarray:
        """``(T, 2)`` sum over mini-slots of the per-agent estimates."""
        if not self.rbar:
            return np.zeros((0, 2))
        return np.asarray(self.rbar).sum(axis=1)


def record_timeslot(trace: RunTrace, flags, rewards, rbar=None) -> None:
    """Append one timeslot.

    ``flags`` is ``(N, K_U)``: UE ``i`` hit an interfered cell in mini-slot
    ``n``.  ``rewards`` is ``(N, 2)`` of (throughput, -energy).  ``rbar`` is
    the ``(N, 2)`` average-reward estimates after the timeslot's updates.
    """
    flags = np.asarray(flags, dtype=bool)
    rewards = np.asarray(rewards)
    if flags.shape[0] != trace.num_minislots or rewards.shape != (trace.num_minislots, 2):
        raise ValueError("flags/rewards do not match the trace's mini-slot count")
    per_slot = flags.any(axis=1)
    bits = 0
    for n in np.flatnonzero(per_slot):
        bits |= 1 << int(n)
    trace.R.append(int(rewards[:, 0].sum()))
    trace.P.append(int(-rewards[:, 1].sum()))
    trace.rbar.append(
        np.zeros((trace.num_minislots, 2)) if rbar is None else np.array(rbar, dtype=float)
    )
    trace.rewards.append(rewards.astype(np.int64))
    trace.err_count.append(int(flags.sum()))
    trace.err_bits.append(bits)
    trace.erroneous_minislots += int(per_slot.sum())
    trace.erroneous_timeslots += int(bits != 0)
    trace._cum_minislots.append(trace.erroneous_minislots)
    trace._cum_timeslots.append(trace.erroneous_timeslots)


def avg_der(trace: RunTrace, level: str = MINISLOT, upto_t: int | None = None) -> float:
    """Fraction of elapsed mini-slots (or timeslots) containing an error."""
    upto_t = len(trace) if upto_t is None else upto_t
    if upto_t <= 0:
        raise ValueError("average DER is undefined over zero timeslots")
    if upto_t > len(trace):
        raise ValueError(f"upto_t={upto_t} exceeds recorded length {len(trace)}")
    if level == MINISLOT:
        return trace._cum_minislots[upto_t - 1] / (trace.num_minislots * upto_t)
    if level == TIMESLOT:
        return trace._cum_timeslots[upto_t - 1] / upto_t
    raise ValueError(f"unknown DER level {level!r}")


def der_series(trace: RunTrace, level: str = MINISLOT) -> np.ndarray:
    t = np.arange(1, len(trace) + 1)
    if level == MINISLOT:
        return np.asarray(trace._cum_minislots, dtype=float) / (trace.num_minislots * t)
    if level == TIMESLOT:
        return np.asarray(trace._cum_timeslots, dtype=float) / t
    raise ValueError(f"unknown DER level {level!r}")


def avg_reward_series(trace: RunTrace) -> np.ndarray:
    """``(T, 2)`` array of (Rbar, Pbar) summed over mini-slots."""
    return trace.rbar_sums()


def moving_average(x, window: int = 100) -> np.ndarray:
    """Trailing mean over up to ``window`` samples (shorter at the start)."""
    x = np.asarray(x, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    c = np.cumsum(np.concatenate([np.zeros((1,) + x.shape[1:]), x]), axis=0)
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    counts = (idx - lo).reshape((-1,) + (1,) * (x.ndim - 1))
    return (c[idx] - c[lo]) / counts


def trace_rows(trace: RunTrace):
    sums = trace.rbar_sums()
    ms, ts = der_series(trace, MINISLOT), der_series(trace, TIMESLOT)
    for t in range(len(trace)):
        yield (
            t,
            trace.R[t],
            trace.P[t],
            repr(float(sums[t, 0])),
            repr(float(sums[t, 1])),
            trace.err_count[t],
            trace.err_bits[t],
            int(trace.err_bits[t] != 0),
            repr(float(ms[t])),
            repr(float(ts[t])),
        )


def trace_to_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerows(trace_rows(trace))
    return buf.getvalue()


def agents_to_csv(trace: RunTrace, window: int = 100) -> str:
    """Per-agent estimates plus trailing moving averages of the sums."""
    N = trace.num_minislots
    header = ["t"]
    for n in range(1, N + 1):
        header += [f"Rbar_{n}", f"Pbar_{n}"]
    header += [f"Rbar_ma{window}", f"Pbar_ma{window}"]
    header += [f"P_{n}" for n in range(1, N + 1)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    if len(trace):
        rb = np.asarray(trace.rbar)
        ma = moving_average(rb.sum(axis=1), window)
        energy = trace.minislot_energy()
        for t in range(len(trace)):
            row = [t] + [repr(float(v)) for v in rb[t].ravel()]
            row += [repr(float(ma[t, 0])), repr(float(ma[t, 1]))]
            row += [int(e) for e in energy[t]]
            writer.writerow(row)
    return buf.getvalue()


def trace_from_csv(text: str, num_minislots: int) -> RunTrace:
    """Rebuild the aggregate columns of a trace from its CSV.

    Per-agent estimates are not in the trace CSV, so the summed estimate is
    stored in the first agent slot.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = set(TRACE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"trace CSV is missing column(s): {', '.join(sorted(missing))}")
    trace = RunTrace(num_minislots)
    for row in reader:
        bits = int(row["minislot_err_bits"])
        trace.R.append(int(row["R_t"]))
        trace.P.append(int(row["P_t"]))
        rb = np.zeros((num_minislots, 2))
        rb[0] = float(row["Rbar"]), float(row["Pbar"])
        trace.rbar.append(rb)
        trace.err_count.append(int(row["err_count"]))
        trace.err_bits.append(bits)
        trace.erroneous_minislots += bin(bits).count("1")
        trace.erroneous_timeslots += int(bits != 0)
        trace._cum_minislots.append(trace.erroneous_minislots)
        trace._cum_timeslots.append(trace.erroneous_timeslots)
    return trace

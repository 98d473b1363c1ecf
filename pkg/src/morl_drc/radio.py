"""Grant-free uplink environment at the power level.

Nothing here generates baseband symbols.  Received powers are analytic
expectations given the drawn channel gains, and decoding is a threshold
test on the SINR.

Indices are 0-based throughout: mini-slot ``n`` in ``0..N-1``, frequency
``m`` in ``0..M-1``, timeslot ``t`` from 0.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .grid import GridDims, ResourceAction, action_energy


class ChannelKind(str, enum.Enum):
    LOS = "los"
    RAYLEIGH = "rayleigh"


class SinrDenominator(str, enum.Enum):
    COCHANNEL = "cochannel"
    ALL_FREQS = "all_freqs"


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind = ChannelKind.LOS
    large_scale_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.large_scale_gain <= 0:
            raise ValueError("large_scale_gain must be positive")


@dataclass(frozen=True)
class PhyParams:
    p_ue: float = 0.1
    p_int: float = 0.2
    noise_power: float = 0.01
    sinr_threshold: float = 1.0

    def __post_init__(self):
        for name in ("p_ue", "p_int", "noise_power", "sinr_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


class RewardVector(NamedTuple):
    throughput: int
    neg_energy: int


@dataclass(frozen=True, eq=False)
class InterferencePattern:
    """Periodic occupation of the grid by interferers.

    ``occupation`` has shape ``(K_I, period, N, M)``.  A 3-D array of shape
    ``(period, N, M)`` is accepted and attributed to the first interferer.
    """

    occupation: np.ndarray
    num_interferers: int = field(default=1)

    def __post_init__(self):
        occ = np.asarray(self.occupation).astype(bool)
        if occ.ndim == 3:
            full = np.zeros((self.num_interferers,) + occ.shape, dtype=bool)
            full[0] = occ
            occ = full
        if occ.ndim != 4 or occ.shape[0] != self.num_interferers:
            raise ValueError(
                f"occupation must have shape (K_I, period, N, M), got {occ.shape}"
            )
        occ.setflags(write=False)
        object.__setattr__(self, "occupation", occ)

    @property
    def period(self) -> int:
        return self.occupation.shape[1]

    @property
    def num_minislots(self) -> int:
        return self.occupation.shape[2]

    @property
    def num_freqs(self) -> int:
        return self.occupation.shape[3]

    def slice(self, t: int, n: int) -> np.ndarray:
        """Occupation ``beta[j, m]`` for mini-slot ``n`` of timeslot ``t``."""
        return self.occupation[:, t % self.period, n]

    def busy(self) -> np.ndarray:
        """``(period, N, M)`` mask of cells used by any interferer."""
        return self.occupation.any(axis=0)

    def fully_occupied(self) -> np.ndarray:
        """``(period, N)`` mask of mini-slots with every frequency occupied."""
        return self.busy().all(axis=2)

    def throughput_ceiling(self, num_ues: int) -> float:
        """Best LoS throughput per timeslot, averaged over one period."""
        free = (~self.busy()).sum(axis=2)
        return float(np.minimum(free, num_ues).sum() / self.period)

    def __eq__(self, other):
        if not isinstance(other, InterferencePattern):
            return NotImplemented
        return np.array_equal(self.occupation, other.occupation)


def default_pattern(dims: GridDims) -> InterferencePattern:
    """Period-1 layout: the last mini-slot is fully jammed, mini-slot ``n``
    of the others loses frequency ``n mod M``."""
    M, N = dims.num_freqs, dims.num_minislots
    occ = np.zeros((1, N, M), dtype=bool)
    occ[0, N - 1, :] = True
    for n in range(N - 1):
        occ[0, n, n % M] = True
    for n in range(N - 1):
        if M - occ[0, n].sum() < dims.num_ues:
            raise ValueError(f"mini-slot {n} leaves fewer than {dims.num_ues} free frequencies")
    return InterferencePattern(occ, num_interferers=dims.num_interferers)


def draw_gains(channel: ChannelModel, dims: GridDims, rng: np.random.Generator | None):
    """Power gains ``|h|^2`` of shape (K_U, M) and ``|g|^2`` of shape (K_I, M).

    LoS returns unit gains and consumes no randomness.
    """
    K_U, K_I, M = dims.num_ues, dims.num_interferers, dims.num_freqs
    scale = channel.large_scale_gain
    if channel.kind is ChannelKind.LOS:
        return np.full((K_U, M), scale), np.full((K_I, M), scale)
    # CN(0, 1): real and imaginary parts each N(0, 1/2)
    z = rng.standard_normal((K_U + K_I, M, 2)) * np.sqrt(0.5)
    h = z[:K_U, :, 0] + 1j * z[:K_U, :, 1]
    g = z[K_U:, :, 0] + 1j * z[K_U:, :, 1]
    return scale * np.abs(h) ** 2, scale * np.abs(g) ** 2


def compute_sinr(
    ue: int,
    action: ResourceAction,
    h_pow: np.ndarray,
    g_pow: np.ndarray,
    beta: np.ndarray,
    phy: PhyParams,
    denominator: SinrDenominator = SinrDenominator.COCHANNEL,
) -> float:
    """SINR of one UE.  Zero when the UE is silent."""
    m = action.freqs[ue]
    if m is None:
        return 0.0
    signal = h_pow[ue, m] * phy.p_ue
    interference = beta * g_pow * phy.p_int
    if SinrDenominator(denominator) is SinrDenominator.COCHANNEL:
        interference = interference[:, m].sum()
    else:
        interference = interference.sum()
    return float(signal / (interference + phy.noise_power))


def observe_powers(
    action: ResourceAction,
    h_pow: np.ndarray,
    g_pow: np.ndarray,
    beta: np.ndarray,
    phy: PhyParams,
) -> np.ndarray:
    """Expected received power on every frequency, noise included."""
    M = h_pow.shape[1]
    powers = (beta * g_pow).sum(axis=0) * phy.p_int + phy.noise_power
    for i, m in enumerate(action.freqs):
        if m is not None:
            powers[m] += h_pow[i, m] * phy.p_ue
    assert powers.shape == (M,)
    return powers


class GrantFreeEnv:
    """Single-AP grant-free uplink with a periodic, unknown interferer."""

    def __init__(
        self,
        dims: GridDims,
        phy: PhyParams | None = None,
        channel: ChannelModel | None = None,
        pattern: InterferencePattern | None = None,
        sinr_denominator: SinrDenominator | str = SinrDenominator.COCHANNEL,
    ):
        self.dims = dims
        self.phy = phy or PhyParams()
        self.channel = channel or ChannelModel()
        self.pattern = pattern if pattern is not None else default_pattern(dims)
        self.sinr_denominator = SinrDenominator(sinr_denominator)
        if (self.pattern.num_minislots, self.pattern.num_freqs) != (
            dims.num_minislots,
            dims.num_freqs,
        ):
            raise ValueError("interference pattern does not match grid dimensions")
        if self.pattern.occupation.shape[0] != dims.num_interferers:
            raise ValueError("interference pattern does not match num_interferers")

    def idle_powers(self) -> np.ndarray:
        """Spectrum state before anything has been received."""
        return np.full(self.dims.num_freqs, self.phy.noise_power)

    def step_minislot(self, action: ResourceAction, n: int, t: int, rng=None):
        """Transmit ``action`` in mini-slot ``n`` of timeslot ``t``.

        Returns ``(reward, powers, errors)``; ``errors[i]`` marks UE ``i``
        transmitting on a cell that an interferer also occupies.
        """
        if not 0 <= n < self.dims.num_minislots:
            raise ValueError(f"mini-slot index {n} out of range")
        beta = self.pattern.slice(t, n)
        h_pow, g_pow = draw_gains(self.channel, self.dims, rng)
        busy = beta.any(axis=0)
        success = 0
        errors = np.zeros(self.dims.num_ues, dtype=bool)
        for i, m in enumerate(action.freqs):
            if m is None:
                continue
            gamma = compute_sinr(i, action, h_pow, g_pow, beta, self.phy, self.sinr_denominator)
            success += gamma >= self.phy.sinr_threshold
            errors[i] = busy[m]
        powers = observe_powers(action, h_pow, g_pow, beta, self.phy)
        return RewardVector(int(success), -action_energy(action)), powers, errors


_PERIOD_RE = re.compile(r"^\s*period\s*=\s*(\d+)\s*$")


def load_pattern(path_or_text, num_interferers: int = 1) -> InterferencePattern:
    """Parse an interference pattern file.

    Format: a ``period = P`` line followed by ``P * N`` rows of ``M``
    whitespace-separated 0/1 values (timeslot-major, then mini-slot).
    ``#`` starts a comment; blank lines are ignored.
    """
    text = _read_text(path_or_text)
    period = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _PERIOD_RE.match(line)
        if match:
            if period is not None:
                raise ValueError(f"line {lineno}: duplicate period")
            period = int(match.group(1))
            continue
        try:
            row = [int(tok) for tok in line.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: expected 0/1 values, got {raw!r}") from None
        if any(v not in (0, 1) for v in row):
            raise ValueError(f"line {lineno}: values must be 0 or 1")
        rows.append(row)
    if period is None or period < 1:
        raise ValueError("pattern file needs a positive 'period = P' line")
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("pattern rows must be non-empty and of equal length")
    if len(rows) % period:
        raise ValueError(f"{len(rows)} rows cannot be split into {period} timeslots")
    occ = np.array(rows, dtype=bool).reshape(period, len(rows) // period, len(rows[0]))
    return InterferencePattern(occ, num_interferers=num_interferers)


def dump_pattern(pattern: InterferencePattern) -> str:
    busy = pattern.busy().astype(int)
    lines = [f"period = {pattern.period}"]
    for k in range(pattern.period):
        lines.append(f"# timeslot {k + 1}: rows are mini-slots, columns frequencies")
        lines.extend(" ".join(str(v) for v in row) for row in busy[k])
    return "\n".join(lines) + "\n"


def _read_text(path_or_text) -> str:
    if isinstance(path_or_text, Path):
        return path_or_text.read_text()
    if "\n" not in path_or_text and Path(path_or_text).is_file():
        return Path(path_or_text).read_text()
    return path_or_text

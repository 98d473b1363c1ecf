"""Scenario configuration: INI files, defaults and figure presets.

A config file is plain ``key = value`` text grouped under section headers::

    [grid]
    num_freqs = 6

    [learning]
    w_p = 0.93

Every key has a default, so an empty file is a valid scenario.  Unknown
sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agent import LearnParams, QuantizerConfig
from .grid import GridDims
from .radio import (
    ChannelKind,
    ChannelModel,
    InterferencePattern,
    PhyParams,
    SinrDenominator,
    default_pattern,
    dump_pattern,
    load_pattern,
)

OUTPUT_ENV_VAR = "MORL_DRC_OUT"
DEFAULT_HORIZON = {ChannelKind.LOS: 5000, ChannelKind.RAYLEIGH: 20000}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    dims: GridDims = field(default_factory=GridDims)
    phy: PhyParams = field(default_factory=PhyParams)
    sinr_denominator: SinrDenominator = SinrDenominator.COCHANNEL
    channel: ChannelModel = field(default_factory=ChannelModel)
    pattern: InterferencePattern | None = None
    learn: LearnParams = field(default_factory=LearnParams)
    quantizer: QuantizerConfig = field(default_factory=QuantizerConfig)
    horizon: int = 5000
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "runs"
    stop_window: int = 200
    stop_tol: float = 0.0
    checkpoint_every: int = 1000
    name: str = "custom"

    def __post_init__(self):
        if self.pattern is None:
            object.__setattr__(self, "pattern", default_pattern(self.dims))
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.stop_window < 1 or self.stop_tol < 0:
            raise ConfigError("stop_window must be >= 1 and stop_tol >= 0")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")
        pat = self.pattern
        if (pat.num_minislots, pat.num_freqs) != (self.dims.num_minislots, self.dims.num_freqs):
            raise ConfigError(
                f"pattern is {pat.num_minislots}x{pat.num_freqs} (mini-slots x freqs), "
                f"grid is {self.dims.num_minislots}x{self.dims.num_freqs}"
            )
        if pat.occupation.shape[0] != self.dims.num_interferers:
            raise ConfigError("pattern interferer count does not match num_interferers")

    @property
    def is_baseline(self) -> bool:
        return self.learn.w[1] == 0


# section -> key -> default, written exactly as it appears on disk
_SCHEMA = {
    "scenario": {"name": "custom"},
    "grid": {"num_freqs": "6", "num_minislots": "6", "num_ues": "2", "num_interferers": "1"},
    "phy": {
        "p_ue": "0.1",
        "p_int": "0.2",
        "noise_power": "0.01",
        "sinr_threshold": "1.0",
        "sinr_denominator": "cochannel",
    },
    "channel": {"kind": "los", "large_scale_gain": "1.0"},
    "pattern": {"file": "", "inline": ""},
    "learning": {
        "w_r": "1.0",
        "w_p": "0.5",
        "kappa_q": "0.1",
        "kappa_r": "0.05",
        "epsilon": "0.1",
        "eta": "0.1",
        "q0_r": "0.0",
        "q0_p": "0.0",
        "exploration_set": "value",
    },
    "quantizer": {"step_db": "5.0", "levels": "8"},
    "run": {
        "horizon": "auto",
        "seeds": "0,1,2,3,4",
        "output_dir": "",
        "stop_window": "200",
        "stop_tol": "0.0",
        "checkpoint_every": "1000",
    },
}

# Fading scatters every quantized reading; a loose match threshold keeps
# the state sets small enough to learn within the horizon.
_RAYLEIGH = {"channel.kind": "rayleigh", "learning.eta": "1.0"}
_BASELINE = {"learning.w_p": "0.0"}

# One preset per figure; the DER comparisons also get a baseline companion.
PRESETS: dict[str, dict[str, str]] = {
    "fig2a": {},
    "fig2b": {"learning.w_p": "0.93"},
    "fig3a": dict(_RAYLEIGH),
    "fig3b": {**_RAYLEIGH, "learning.w_p": "0.93"},
    "fig4a": {},
    "fig4b": dict(_BASELINE),
    "fig5": {},
    "fig5-baseline": dict(_BASELINE),
    "fig6": dict(_RAYLEIGH),
    "fig6-baseline": {**_RAYLEIGH, **_BASELINE},
}


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def _merged(text: str | None, preset: str | None, overrides: dict | None) -> dict:
    values = {sec: dict(keys) for sec, keys in _SCHEMA.items()}

    def put(dotted: str, value, origin: str):
        sec, _, key = dotted.partition(".")
        if sec not in _SCHEMA or key not in _SCHEMA[sec]:
            raise ConfigError(f"unknown config key {dotted!r} ({origin})")
        values[sec][key] = str(value)

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values["scenario"]["name"] = preset
        for k, v in PRESETS[preset].items():
            put(k, v, f"preset {preset}")
    if text:
        cp = _parser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, val in cp.items(sec):
                put(f"{sec}.{key}", val, "config file")
    for k, v in (overrides or {}).items():
        put(k, v, "override")
    return values


def _num(values, sec, key, kind=float):
    raw = values[sec][key].strip()
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}: cannot read {raw!r} as {kind.__name__}") from None


def load_config(
    source: str | os.PathLike | None = None,
    preset: str | None = None,
    overrides: dict | None = None,
) -> ScenarioConfig:
    """Resolve a scenario from a file path or INI text.

    Precedence: built-in defaults, then ``preset``, then ``source``, then
    ``overrides`` (a mapping of ``"section.key"`` to value).
    """
    base_dir = Path.cwd()
    text = None
    if source is not None:
        path = Path(source)
        if isinstance(source, os.PathLike) or ("\n" not in str(source) and path.is_file()):
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            base_dir = path.resolve().parent
        elif "\n" not in str(source) and "=" not in str(source) and str(source).strip():
            raise ConfigError(f"config file not found: {source}")
        else:
            text = str(source)
    v = _merged(text, preset, overrides)

    try:
        dims = GridDims(
            num_freqs=_num(v, "grid", "num_freqs", int),
            num_minislots=_num(v, "grid", "num_minislots", int),
            num_ues=_num(v, "grid", "num_ues", int),
            num_interferers=_num(v, "grid", "num_interferers", int),
        )
        phy = PhyParams(
            p_ue=_num(v, "phy", "p_ue"),
            p_int=_num(v, "phy", "p_int"),
            noise_power=_num(v, "phy", "noise_power"),
            sinr_threshold=_num(v, "phy", "sinr_threshold"),
        )
        denominator = SinrDenominator(v["phy"]["sinr_denominator"].strip())
        channel = ChannelModel(
            kind=ChannelKind(v["channel"]["kind"].strip().lower()),
            large_scale_gain=_num(v, "channel", "large_scale_gain"),
        )
        pattern_file = v["pattern"]["file"].strip()
        inline = v["pattern"]["inline"].strip()
        if pattern_file and inline:
            raise ConfigError("give either pattern.file or pattern.inline, not both")
        if pattern_file:
            p = Path(pattern_file)
            p = p if p.is_absolute() else base_dir / p
            if not p.is_file():
                raise ConfigError(f"pattern file not found: {p}")
            pattern = load_pattern(p, dims.num_interferers)
        elif inline:
            pattern = load_pattern(inline + "\n", dims.num_interferers)
        else:
            pattern = default_pattern(dims)
        learn = LearnParams(
            w=(_num(v, "learning", "w_r"), _num(v, "learning", "w_p")),
            kappa_q=_num(v, "learning", "kappa_q"),
            kappa_r=_num(v, "learning", "kappa_r"),
            epsilon=_num(v, "learning", "epsilon"),
            eta=_num(v, "learning", "eta"),
            q0=(_num(v, "learning", "q0_r"), _num(v, "learning", "q0_p")),
            exploration_set=v["learning"]["exploration_set"].strip(),
        )
        quantizer = QuantizerConfig(
            step_db=_num(v, "quantizer", "step_db"),
            levels=_num(v, "quantizer", "levels", int),
            reference_power=phy.noise_power,
        )
        horizon_raw = v["run"]["horizon"].strip()
        horizon = DEFAULT_HORIZON[channel.kind] if horizon_raw == "auto" else _num(v, "run", "horizon", int)
        seeds_raw = v["run"]["seeds"].replace(" ", "")
        try:
            seeds = tuple(int(s) for s in seeds_raw.split(",") if s)
        except ValueError:
            raise ConfigError(f"run.seeds: expected comma-separated integers, got {seeds_raw!r}") from None
        output_dir = v["run"]["output_dir"].strip() or os.environ.get(OUTPUT_ENV_VAR, "runs")
        return ScenarioConfig(
            dims=dims,
            phy=phy,
            sinr_denominator=denominator,
            channel=channel,
            pattern=pattern,
            learn=learn,
            quantizer=quantizer,
            horizon=horizon,
            seeds=seeds,
            output_dir=output_dir,
            stop_window=_num(v, "run", "stop_window", int),
            stop_tol=_num(v, "run", "stop_tol"),
            checkpoint_every=_num(v, "run", "checkpoint_every", int),
            name=v["scenario"]["name"].strip() or "custom",
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: ScenarioConfig) -> str:
    """Fully expanded INI text; ``load_config(dump_config(c))`` reproduces ``c``."""
    d, phy, lp, qz = cfg.dims, cfg.phy, cfg.learn, cfg.quantizer
    sections = {
        "scenario": {"name": cfg.name},
        "grid": {
            "num_freqs": d.num_freqs,
            "num_minislots": d.num_minislots,
            "num_ues": d.num_ues,
            "num_interferers": d.num_interferers,
        },
        "phy": {
            "p_ue": repr(phy.p_ue),
            "p_int": repr(phy.p_int),
            "noise_power": repr(phy.noise_power),
            "sinr_threshold": repr(phy.sinr_threshold),
            "sinr_denominator": cfg.sinr_denominator.value,
        },
        "channel": {
            "kind": cfg.channel.kind.value,
            "large_scale_gain": repr(cfg.channel.large_scale_gain),
        },
        "learning": {
            "w_r": repr(float(lp.w[0])),
            "w_p": repr(float(lp.w[1])),
            "kappa_q": repr(lp.kappa_q),
            "kappa_r": repr(lp.kappa_r),
            "epsilon": repr(lp.epsilon),
            "eta": repr(lp.eta),
            "q0_r": repr(float(lp.q0[0])),
            "q0_p": repr(float(lp.q0[1])),
            "exploration_set": lp.exploration_set,
        },
        "quantizer": {"step_db": repr(qz.step_db), "levels": qz.levels},
        "run": {
            "horizon": cfg.horizon,
            "seeds": ",".join(str(s) for s in cfg.seeds),
            "output_dir": cfg.output_dir,
            "stop_window": cfg.stop_window,
            "stop_tol": repr(cfg.stop_tol),
            "checkpoint_every": cfg.checkpoint_every,
        },
    }
    lines = []
    for sec, keys in sections.items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {val}" for k, val in keys.items())
        lines.append("")
    pattern_rows = dump_pattern(cfg.pattern).splitlines()
    lines.append("[pattern]")
    lines.append("inline =")
    lines.extend("    " + row for row in pattern_rows if not row.startswith("#"))
    return "\n".join(lines) + "\n"


def with_weights(cfg: ScenarioConfig, w_p: float, w_r: float | None = None) -> ScenarioConfig:
    w_r = cfg.learn.w[0] if w_r is None else w_r
    return replace(cfg, learn=replace(cfg.learn, w=(float(w_r), float(w_p))))

"""Scenario descriptions: dataclasses, validation, the key-value file format,
and the built-in presets used by the experiments."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class D2dMode(str, enum.Enum):
    DISABLED = "disabled"
    PROACTIVE = "proactive"
    ON_DEMAND = "on_demand"


class ConfigError(ValueError):
    """Raised for unparsable or invalid scenario descriptions."""


@dataclass(frozen=True)
class TimingModel:
    """Delay constants, all in milliseconds except the dimensionless
    interference coefficient."""

    t_discovery_ms: float = 64.0
    t_handover_ms: float = 10.0
    per_hop_v2v_ms: float = 50.0
    per_hop_d2d_ms: float = 100.0
    v2v_recovery_per_hop_ms: float = 50.0
    interference_coeff: float = 0.02


@dataclass(frozen=True)
class ScenarioConfig:
    road_length_m: float = 2000.0
    vehicle_count: int = 60
    v2v_range_m: float = 250.0
    d2d_range_m: float = 1000.0
    speed_min_kmh: float = 30.0
    speed_max_kmh: float = 100.0
    packet_interval_s: float = 0.5
    # carried as metadata only; delays are driven by per-hop costs
    packet_size_kb: float = 256.0
    sim_duration_s: float = 600.0
    d2d_mode: D2dMode = D2dMode.DISABLED
    # the first RSU is the alert destination, the others are alternates
    rsu_positions_m: tuple[float, ...] = (2000.0,)
    failure_distance_m: float | None = None
    timing: TimingModel = field(default_factory=TimingModel)
    seed: int = 1
    source_position_m: float | None = None
    gap_m: float | None = None

    def __post_init__(self):
        if isinstance(self.d2d_mode, str):
            object.__setattr__(self, "d2d_mode", D2dMode(self.d2d_mode))
        object.__setattr__(
            self, "rsu_positions_m", tuple(float(p) for p in self.rsu_positions_m)
        )

    def resolved_timing(self) -> TimingModel:
        """Timing as actually charged: proactive discovery costs nothing."""
        if self.d2d_mode is D2dMode.PROACTIVE:
            return replace(self.timing, t_discovery_ms=0.0, t_handover_ms=0.0)
        return self.timing

    @property
    def target_rsu_m(self) -> float:
        return self.rsu_positions_m[0]

    @property
    def dead_end_gap_m(self) -> float:
        return self.gap_m if self.gap_m is not None else self.v2v_range_m + 50.0

    def with_values(self, **changes) -> "ScenarioConfig":
        """Copy with fields replaced; timing fields may be given flat."""
        timing_names = {f.name for f in fields(TimingModel)}
        timing_changes = {k: changes.pop(k) for k in list(changes) if k in timing_names}
        cfg = replace(self, **changes)
        if timing_changes:
            cfg = replace(cfg, timing=replace(cfg.timing, **timing_changes))
        return cfg


def validate(config: ScenarioConfig) -> list[str]:
    """Return the list of violated invariants; empty means valid."""
    problems = []
    if not config.road_length_m > 0:
        problems.append("road_length_m > 0")
    if not (isinstance(config.vehicle_count, int) and config.vehicle_count >= 1):
        problems.append("vehicle_count ≥ 1")
    for name in ("v2v_range_m", "d2d_range_m"):
        if not getattr(config, name) > 0:
            problems.append(f"{name} > 0")
    if not config.speed_min_kmh <= config.speed_max_kmh:
        problems.append("speed_min ≤ speed_max")
    for name in ("speed_min_kmh", "speed_max_kmh"):
        if not 0 < getattr(config, name) <= 200:
            problems.append(f"{name} ∈ (0, 200]")
    if not config.packet_interval_s > 0:
        problems.append("packet_interval_s > 0")
    if not config.sim_duration_s >= 0:
        problems.append("sim_duration_s ≥ 0")
    if not config.rsu_positions_m:
        problems.append("at least one RSU")
    for p in config.rsu_positions_m:
        if not 0 <= p <= config.road_length_m:
            problems.append(f"rsu position {p} ∈ [0, road_length_m]")
    if config.failure_distance_m is not None and config.rsu_positions_m:
        if not 0 < config.failure_distance_m <= config.target_rsu_m:
            problems.append("0 < failure_distance_m ≤ target rsu position")
    if config.gap_m is not None and not config.gap_m > 0:
        problems.append("gap_m > 0")
    if config.source_position_m is not None and not (
        0 <= config.source_position_m <= config.road_length_m
    ):
        problems.append("source_position_m ∈ [0, road_length_m]")
    if not 0 <= config.seed < 2**64:
        problems.append("seed is a 64-bit unsigned integer")
    for f in fields(TimingModel):
        value = getattr(config.timing, f.name)
        if not (math.isfinite(value) and value >= 0):
            problems.append(f"{f.name} ≥ 0")
    return problems


def check(config: ScenarioConfig) -> ScenarioConfig:
    problems = validate(config)
    if problems:
        raise ConfigError("invalid scenario: " + "; ".join(problems))
    return config


# --- key = value file format -------------------------------------------------

_TIMING_KEYS = {f.name for f in fields(TimingModel)}
_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)} - {"timing"}
_OPTIONAL_KEYS = {"failure_distance_m", "source_position_m", "gap_m"}
_INT_KEYS = {"vehicle_count", "seed"}


def _parse_value(key: str, raw: str):
    if key in _OPTIONAL_KEYS and raw.lower() in ("", "none"):
        return None
    if key == "d2d_mode":
        return D2dMode(raw)
    if key == "rsu_positions_m":
        return tuple(float(p) for p in raw.split(",") if p.strip())
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCENARIO_KEYS and key not in _TIMING_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return check(ScenarioConfig().with_values(**values))


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _format_value(value) -> str:
    if isinstance(value, D2dMode):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario(config: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(config, f.name)
        if f.name == "timing":
            for tf in fields(TimingModel):
                lines.append(f"{tf.name} = {_format_value(getattr(value, tf.name))}")
        elif value is not None:
            lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def write_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(dump_scenario(config), encoding="utf-8", newline="\n")


# --- presets -----------------------------------------------------------------

TABLE1_DEFAULT = ScenarioConfig()

# Failure 4 km before the RSU, source at the start of the road.  v2v range
# 250 m so that a 300 m void is spannable by every D2D range preset.
_FAILURE_BASE = ScenarioConfig(
    road_length_m=5000.0,
    vehicle_count=100,
    v2v_range_m=250.0,
    rsu_positions_m=(5000.0,),
    failure_distance_m=4000.0,
    gap_m=300.0,
    source_position_m=0.0,
)

# V2V-RA: the destination RSU lies past the void, an alternate one behind
# the source.
_V2VRA_BASE = replace(
    _FAILURE_BASE,
    road_length_m=6000.0,
    vehicle_count=120,
    rsu_positions_m=(6000.0, 0.0),
    source_position_m=1000.0,
)

_SWEEP_BASE = ScenarioConfig(
    road_length_m=2000.0, vehicle_count=60, v2v_range_m=250.0, rsu_positions_m=(2000.0,)
)

# Recovery ladder: the D2D bridge lands next to the destination RSU while the
# V2V-RA detour reaches an alternate RSU about 1.5 km behind the void.
_LADDER_BASE = replace(
    _FAILURE_BASE,
    road_length_m=6000.0,
    vehicle_count=120,
    rsu_positions_m=(6000.0, 3000.0),
    failure_distance_m=1500.0,
    source_position_m=4400.0,
    d2d_range_m=1500.0,
    timing=TimingModel(interference_coeff=0.0),
)


def _builtins() -> dict[str, ScenarioConfig]:
    b: dict[str, ScenarioConfig] = {"table1_default": TABLE1_DEFAULT}
    for rng in (1500, 1000, 500):
        b[f"proactive_{rng}"] = replace(
            _FAILURE_BASE, d2d_mode=D2dMode.PROACTIVE, d2d_range_m=float(rng)
        )
        b[f"ondemand_{rng}"] = replace(
            _FAILURE_BASE, d2d_mode=D2dMode.ON_DEMAND, d2d_range_m=float(rng)
        )
    b["v2vra_best"] = _V2VRA_BASE
    b["v2vra_worst"] = _V2VRA_BASE.with_values(v2v_recovery_per_hop_ms=200.0)
    b["fig4_hops_sweep"] = _SWEEP_BASE.with_values(interference_coeff=0.0)
    b["fig5_delay_sweep"] = _SWEEP_BASE.with_values(interference_coeff=0.02)
    b["fig7_recovery_ladder"] = _LADDER_BASE
    return b


BUILTIN_SCENARIOS = _builtins()


def builtin_scenarios() -> list[tuple[str, ScenarioConfig]]:
    return list(BUILTIN_SCENARIOS.items())


def _relay_variants(base: ScenarioConfig) -> list[tuple[str, ScenarioConfig]]:
    return [
        ("gpsr_250", replace(base, v2v_range_m=250.0)),
        ("gpsr_350", replace(base, v2v_range_m=350.0)),
        ("d2d_550", replace(base, v2v_range_m=550.0, d2d_mode=D2dMode.PROACTIVE)),
    ]


def _ladder_variants(base: ScenarioConfig) -> list[tuple[str, ScenarioConfig]]:
    on_demand = replace(base, d2d_mode=D2dMode.ON_DEMAND)
    return [
        ("d2d_proactive", replace(base, d2d_mode=D2dMode.PROACTIVE)),
        ("d2d_discovery_best", on_demand.with_values(t_discovery_ms=10.0)),
        ("gpsr_best", base.with_values(v2v_recovery_per_hop_ms=50.0)),
        ("gpsr_worst", base.with_values(v2v_recovery_per_hop_ms=200.0)),
        ("d2d_ondemand_worst", on_demand.with_values(t_discovery_ms=500.0)),
    ]


_FAMILIES = {
    "fig4_hops_sweep": _relay_variants,
    "fig5_delay_sweep": _relay_variants,
    "fig7_recovery_ladder": _ladder_variants,
}


def scenario_variants(name: str, config: ScenarioConfig | None = None):
    """Labeled configurations making up one experiment.

    Experiment families expand into their comparison curves; any other scenario
    is a single curve labeled with its own name.
    """
    if config is None:
        config = resolve_scenario(name)
    family = _FAMILIES.get(name)
    if family is None:
        return [(name, config)]
    return family(config)


def resolve_scenario(name_or_path: str) -> ScenarioConfig:
    if name_or_path in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name_or_path]
    path = Path(name_or_path)
    if path.is_file():
        return load_scenario(path)
    raise ConfigError(f"unknown scenario {name_or_path!r} (not a built-in or a file)")


def config_dict(config: ScenarioConfig) -> dict:
    """Flat field dictionary, timing fields inlined."""
    d = {f.name: getattr(config, f.name) for f in fields(ScenarioConfig) if f.name != "timing"}
    d.update(dataclasses.asdict(config.timing))
    return d

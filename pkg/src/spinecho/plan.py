"""Run configuration: JSON files, shipped presets and dotted overrides.

A config file holds a ``base`` mapping and an optional list of ``runs``,
each run applying its own ``set`` overrides on top of the base::

    {"name": "fig3", "base": {...},
     "runs": [{"name": "n4_avg0", "set": {"model.kind": "avg_h0"}}]}
"""
from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import MISSING, asdict, dataclass, field, fields
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence as Seq,
    Tuple,
    Type,
    TypeVar,
)

import numpy as np

from .dsl import parse_sequence
from .engine import Interaction, ModelKind, PulseModel
from .errors import ConfigError, SpinEchoError
from .lattice import (
    C13_GAMMA_OVER_2PI,
    SI29_GAMMA_OVER_2PI,
    DisorderConfig,
    LatticeSpec,
    OffsetWidth,
    Selection,
    load_custom_lattice,
)
from .observables import DEFAULT_THRESHOLD, Detection
from .sequence import (
    TABLE1,
    Sequence,
    build_bb1,
    build_hahn,
    build_ostroff_waugh,
    build_table1,
)
from .spinops import TWO_PI

logger = logging.getLogger(__name__)

PRESET_DIR = "presets"

T = TypeVar("T")
E = TypeVar("E", bound=Enum)

BUILDERS = ("hahn", "bb1", "ostroff_waugh", "dsl") + tuple(
    name.lower() for name in TABLE1)

BUILTIN_LATTICES = ("diamond", "fcc")

NUCLEI = {"si29": SI29_GAMMA_OVER_2PI, "c13": C13_GAMMA_OVER_2PI}


# ---------------------------------------------------------------- values

def _float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", path)
    return float(value)


def _opt_float(value: Any, path: str) -> Optional[float]:
    return None if value is None else _float(value, path)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", path)
    return value


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", path)
    return value


def _opt_str(value: Any, path: str) -> Optional[str]:
    return None if value is None else _str(value, path)


def _list(value: Any, path: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"expected a list, got {value!r}", path)
    return list(value)


def _floats(value: Any, path: str) -> Tuple[float, ...]:
    return tuple(_float(v, f"{path}[{i}]")
                 for i, v in enumerate(_list(value, path)))


def _ints(value: Any, path: str) -> Tuple[int, ...]:
    return tuple(_int(v, f"{path}[{i}]")
                 for i, v in enumerate(_list(value, path)))


def _enum(kind: Type[E]) -> Callable[[Any, str], E]:
    def convert(value: Any, path: str) -> E:
        if isinstance(value, kind):
            return value
        text = _str(value, path)
        try:
            return kind[text.upper()]
        except KeyError:
            names = ", ".join(m.name.lower() for m in kind)
            raise ConfigError(
                f"unknown value {text!r} (expected one of {names})", path
            ) from None
    return convert


def _gamma(value: Any, path: str) -> float:
    if isinstance(value, str):
        if value.lower() not in NUCLEI:
            raise ConfigError(
                f"unknown nucleus {value!r} (expected a number in Hz/T "
                f"or one of {', '.join(NUCLEI)})", path)
        return NUCLEI[value.lower()]
    return _float(value, path)


def _mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(f"expected an object, got {value!r}", path)
    return value


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _build(cls: Type[T], data: Any, path: str,
           converters: Mapping[str, Callable[[Any, str], Any]]) -> T:
    """Instantiate ``cls`` from a mapping, rejecting unknown keys."""
    data = _mapping(data, path)
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError("unknown key", _join(path, key))
    for f in fields(cls):
        required = (f.default is MISSING
                    and f.default_factory is MISSING)
        if required and f.name not in data:
            raise ConfigError("missing required key", _join(path, f.name))
    kwargs = {
        key: converters[key](value, _join(path, key))
        for key, value in data.items()
    }
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except SpinEchoError as exc:
        raise ConfigError(str(exc), path or None) from exc


# -------------------------------------------------------------- sections

@dataclass(frozen=True)
class LatticeConfig:
    name: str = "diamond"
    lattice_constant: Optional[float] = None
    multiplicity: int = 1
    file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.file is None and self.name not in BUILTIN_LATTICES:
            raise ConfigError(
                f"unknown lattice {self.name!r} (expected one of "
                f"{', '.join(BUILTIN_LATTICES)} or a 'file')",
                "lattice.name")
        if self.multiplicity < 1:
            raise ConfigError(f"must be >= 1, got {self.multiplicity}",
                              "lattice.multiplicity")

    def build(self) -> LatticeSpec:
        if self.file is not None:
            return load_custom_lattice(Path(self.file), self.multiplicity)
        kwargs: Dict[str, Any] = {}
        if self.lattice_constant is not None:
            kwargs["a"] = self.lattice_constant
        if self.name == "fcc":
            kwargs["multiplicity"] = self.multiplicity
        elif self.multiplicity != 1:
            raise ConfigError(
                f"multiplicity is only supported for fcc and custom "
                f"lattices, not {self.name!r}", "lattice.multiplicity")
        return LatticeSpec.builtin(self.name, **kwargs)


_LATTICE_FIELDS = {
    "name": _str,
    "lattice_constant": _opt_float,
    "multiplicity": _int,
    "file": _opt_str,
}

_DISORDER_FIELDS = {
    "abundance": _float,
    "n_spins": _int,
    "shell_radius": _opt_float,
    "gamma_over_2pi": _gamma,
    "gamma_scale": _float,
    "offset_fwhm": _float,
    "offset_width": _enum(OffsetWidth),
    "selection": _enum(Selection),
    "per_spin_offsets": _bool,
}


@dataclass(frozen=True)
class SequenceConfig:
    builder: str = "cpmg"
    tau: float = 1e-6
    n_echoes: int = 2
    tau_values: Tuple[float, ...] = ()
    base: str = "CPMG"
    dsl: Optional[str] = None
    dsl_file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.builder not in BUILDERS:
            raise ConfigError(
                f"unknown builder {self.builder!r} (expected one of "
                f"{', '.join(BUILDERS)})", "sequence.builder")
        if self.builder == "dsl":
            if (self.dsl is None) == (self.dsl_file is None):
                raise ConfigError("give exactly one of 'dsl' and "
                                  "'dsl_file'", "sequence")
            if self.dsl_file is not None and not Path(
                    self.dsl_file).is_file():
                raise ConfigError(f"no such file: {self.dsl_file}",
                                  "sequence.dsl_file")
        if self.tau_values and self.builder != "hahn":
            raise ConfigError("tau sweeps need the hahn builder",
                              "sequence.tau_values")
        if any(t <= 0 for t in self.tau_values):
            raise ConfigError("every tau must be > 0",
                              "sequence.tau_values")
        if np.any(np.diff(self.tau_values) <= 0):
            raise ConfigError("tau values must be strictly increasing",
                              "sequence.tau_values")
        if self.n_echoes < 1:
            raise ConfigError(f"must be >= 1, got {self.n_echoes}",
                              "sequence.n_echoes")

    def build(self, tau: Optional[float] = None) -> Sequence:
        tau = self.tau if tau is None else tau
        if self.builder == "hahn":
            return build_hahn(tau)
        if self.builder == "bb1":
            return build_bb1(tau, self.n_echoes, self.base)
        if self.builder == "ostroff_waugh":
            if self.n_echoes % 2:
                raise ConfigError("must be even for ostroff_waugh",
                                  "sequence.n_echoes")
            return build_ostroff_waugh(tau, self.n_echoes // 2)
        if self.builder == "dsl":
            text = self.dsl
            if text is None:
                text = Path(self.dsl_file).read_text(encoding="utf-8")
            seq = parse_sequence(text)
            name = Path(self.dsl_file).stem if self.dsl_file else "dsl"
            return Sequence(seq.prologue, seq.cycle, seq.repeats, name)
        return build_table1(self.builder, tau, self.n_echoes)

    def sequences(self) -> List[Sequence]:
        """One sequence per tau of a sweep, else the single sequence."""
        if self.tau_values:
            return [self.build(t) for t in self.tau_values]
        return [self.build()]


_SEQUENCE_FIELDS = {
    "builder": lambda v, p: _str(v, p).lower(),
    "tau": _float,
    "n_echoes": _int,
    "tau_values": _floats,
    "base": lambda v, p: _str(v, p).upper(),
    "dsl": _opt_str,
    "dsl_file": _opt_str,
}


@dataclass(frozen=True)
class ModelConfig:
    kind: ModelKind = ModelKind.DELTA
    omega1_over_2pi: Optional[float] = None  # Hz
    angle_scale: float = 1.0

    def build(self) -> PulseModel:
        omega1 = None
        if self.omega1_over_2pi is not None:
            omega1 = TWO_PI * self.omega1_over_2pi
        return PulseModel(self.kind, omega1, self.angle_scale)


_MODEL_FIELDS = {
    "kind": _enum(ModelKind),
    "omega1_over_2pi": _opt_float,
    "angle_scale": _float,
}


@dataclass(frozen=True)
class OutputConfig:
    csv: Optional[str] = None
    snapshot_echoes: Tuple[int, ...] = ()
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"must be in (0, 1), got {self.threshold}",
                              "output.threshold")
        if any(e < 1 for e in self.snapshot_echoes):
            raise ConfigError("echo indices start at 1",
                              "output.snapshot_echoes")


_OUTPUT_FIELDS = {
    "csv": _opt_str,
    "snapshot_echoes": _ints,
    "threshold": _float,
}


@dataclass(frozen=True)
class AnalyticConfig:
    times: Tuple[float, ...] = ()
    t_max: Optional[float] = None
    points: int = 50

    def __post_init__(self) -> None:
        if self.points < 1:
            raise ConfigError(f"must be >= 1, got {self.points}",
                              "analytic.points")
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError(f"must be > 0, got {self.t_max}",
                              "analytic.t_max")
        if self.times and np.any(np.diff(self.times) <= 0):
            raise ConfigError("times must be strictly increasing",
                              "analytic.times")

    def resolve(self) -> Tuple[float, ...]:
        if self.times:
            return self.times
        if self.t_max is None:
            raise ConfigError("give 'times' or 't_max'", "analytic")
        grid = np.linspace(0.0, self.t_max, self.points + 1)[1:]
        return tuple(float(t) for t in grid)


_ANALYTIC_FIELDS = {
    "times": _floats,
    "t_max": _opt_float,
    "points": _int,
}


@dataclass(frozen=True)
class RunConfig:
    name: str
    lattice: LatticeConfig
    disorder: DisorderConfig
    sequence: SequenceConfig = field(default_factory=SequenceConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    interaction: Interaction = Interaction.DIPOLAR
    detection: Detection = Detection.TOTAL
    n_dr: int = 1
    master_seed: int = 0
    workers: int = 1
    output: OutputConfig = field(default_factory=OutputConfig)
    analytic: AnalyticConfig = field(default_factory=AnalyticConfig)

    def __post_init__(self) -> None:
        if self.n_dr < 1:
            raise ConfigError(f"must be >= 1, got {self.n_dr}", "n_dr")
        if self.workers < 1:
            raise ConfigError(f"must be >= 1, got {self.workers}",
                              "workers")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("must be in [0, 2**64)", "master_seed")
        if self.lattice.file is not None and not Path(
                self.lattice.file).is_file():
            raise ConfigError(f"no such file: {self.lattice.file}",
                              "lattice.file")

    @property
    def csv_name(self) -> str:
        return self.output.csv or f"{self.name}.csv"

    def to_dict(self) -> Dict[str, Any]:
        """Plain JSON-ready form; enums by lower-case name."""
        return _plain(asdict(self))


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.name.lower()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


_RUN_FIELDS: Dict[str, Callable[[Any, str], Any]] = {
    "name": _str,
    "lattice": lambda v, p: _build(LatticeConfig, v, p, _LATTICE_FIELDS),
    "disorder": lambda v, p: _build(DisorderConfig, v, p,
                                    _DISORDER_FIELDS),
    "sequence": lambda v, p: _build(SequenceConfig, v, p,
                                    _SEQUENCE_FIELDS),
    "model": lambda v, p: _build(ModelConfig, v, p, _MODEL_FIELDS),
    "interaction": _enum(Interaction),
    "detection": _enum(Detection),
    "n_dr": _int,
    "master_seed": _int,
    "workers": _int,
    "output": lambda v, p: _build(OutputConfig, v, p, _OUTPUT_FIELDS),
    "analytic": lambda v, p: _build(AnalyticConfig, v, p,
                                    _ANALYTIC_FIELDS),
}


def run_config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    return _build(RunConfig, data, "", _RUN_FIELDS)


# ----------------------------------------------------------- config files

@dataclass(frozen=True)
class ConfigFile:
    name: str
    description: str
    base: Dict[str, Any]
    runs: Tuple[Tuple[str, Dict[str, Any]], ...] = ()

    def resolve(self) -> List[RunConfig]:
        """Every configured run, overrides applied, validated."""
        if not self.runs:
            data = dict(self.base)
            data.setdefault("name", self.name)
            return [run_config_from_mapping(data)]
        out = []
        for run_name, overrides in self.runs:
            data = apply_overrides(self.base, overrides)
            data["name"] = run_name
            try:
                out.append(run_config_from_mapping(data))
            except ConfigError as exc:
                raise ConfigError(exc.message,
                                  _join(f"runs[{run_name}]", exc.path or "")
                                  ) from exc
        return out

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ConfigFile":
        """Apply ``overrides`` to the base and after every run's ``set``."""
        runs = []
        for run_name, own in self.runs:
            shadowed = sorted(set(own) & set(overrides))
            if shadowed:
                logger.info("run %s: %s set on the command line", run_name,
                            ", ".join(shadowed))
            kept = {k: v for k, v in own.items() if k not in overrides}
            runs.append((run_name, {**kept, **overrides}))
        return ConfigFile(self.name, self.description,
                          apply_overrides(self.base, overrides),
                          tuple(runs))


def _set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    if not all(keys):
        raise ConfigError("empty path component", dotted)
    node = data
    for i, key in enumerate(keys[:-1]):
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigError("not an object",
                              ".".join(keys[:i + 1]))
        node = child
    node[keys[-1]] = value


def apply_overrides(base: Mapping[str, Any],
                    overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Deep copy of ``base`` with each dotted key set to its value."""
    data = copy.deepcopy(dict(base))
    for dotted, value in overrides.items():
        _set_dotted(data, dotted, value)
    return data


def parse_assignment(text: str) -> Tuple[str, Any]:
    """``key=value``; the value is JSON when it parses, else a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"expected key=value, got {text!r}", "--set")
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return key.strip(), value


def config_from_mapping(data: Any, source: str = "") -> ConfigFile:
    data = _mapping(data, "")
    if "base" in data:
        for key in data:
            if key not in ("name", "description", "base", "runs"):
                raise ConfigError("unknown key", key)
        base = dict(_mapping(data["base"], "base"))
    else:
        # a flat file is a single run
        base = {k: v for k, v in data.items()
                if k not in ("description", "runs")}
    runs = []
    for i, run in enumerate(_list(data.get("runs", []), "runs")):
        run = _mapping(run, f"runs[{i}]")
        name = _str(run.get("name"), f"runs[{i}].name")
        overrides = dict(_mapping(run.get("set", {}), f"runs[{i}].set"))
        runs.append((name, overrides))
    names = [n for n, _ in runs]
    if len(set(names)) != len(names):
        raise ConfigError("run names must be unique", "runs")
    return ConfigFile(
        name=str(data.get("name", source or "config")),
        description=str(data.get("description", "")),
        base=base,
        runs=tuple(runs),
    )


def list_presets() -> List[str]:
    root = resources.files("spinecho") / PRESET_DIR
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".json"))


def _read_preset(name: str) -> str:
    resource = resources.files("spinecho") / PRESET_DIR / f"{name}.json"
    if not resource.is_file():
        raise ConfigError(
            f"no config file or preset named {name!r} (presets: "
            f"{', '.join(list_presets())})", "--config")
    return resource.read_text(encoding="utf-8")


def load_config(source: str) -> ConfigFile:
    """Read a config file by path, or a shipped preset by name."""
    path = Path(source)
    if path.is_file():
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}",
                              "--config") from exc
        stem = path.stem
    else:
        text = _read_preset(source)
        stem = source
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"invalid JSON in {source}: {exc}",
                          "--config") from exc
    return config_from_mapping(data, stem)


def select_runs(runs: Seq[RunConfig], names: Seq[str]) -> List[RunConfig]:
    if not names:
        return list(runs)
    by_name = {r.name: r for r in runs}
    missing = [n for n in names if n not in by_name]
    if missing:
        raise ConfigError(
            f"unknown run(s) {', '.join(missing)} (have "
            f"{', '.join(by_name)})", "--run")
    return [by_name[n] for n in names]

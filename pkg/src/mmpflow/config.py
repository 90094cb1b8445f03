"""Run configuration: strict INI-style parsing, validation and serialization.

Example::

    [grid]
    n = 16

    [params]
    mu = 0.05
    chi = 0.02
    kappa = 0.03
    gamma = 0.04
    nu = 0.05

    [initial]
    preset = taylor_green

    [solver]
    method = imex
    T = 0.1
    dt = 0.001

Every section except ``grid``, ``params`` and ``solver`` is optional, and
every key outside the schema below is rejected.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .dynamics import MMPParams
from .errors import ConfigParseError, ConfigValidationError
from .integrate import PicardConfig

PRESETS = ("taylor_green", "single_mode", "random_seeded")
METHODS = ("imex", "picard")
REDUCTIONS = ("none", "navier_stokes", "mhd", "micropolar")


@dataclass(frozen=True)
class InitialSpec:
    preset: str = "taylor_green"
    amp_u: float = 1.0
    amp_omega: float = 0.0
    amp_b: float = 0.0
    seed: int = 0
    kmax: float = 4.0
    mode: tuple[int, int, int] = (1, 0, 0)


@dataclass(frozen=True)
class SolverSpec:
    method: str = "imex"
    T: float = 0.0
    dt: Optional[float] = None
    M: Optional[int] = None
    s: float = 2.0
    max_iters: int = 30
    cauchy_tol: float = 1e-10
    truncation_offset: int = 2


@dataclass(frozen=True)
class MonitorSpec:
    cadence: int = 10
    snapshot_stride: int = 0
    hs: tuple[float, ...] = (1.0, 2.0)
    lp: tuple[float, ...] = (2.0,)
    epsilons: tuple[float, ...] = ()
    warn_threshold: float = math.inf


@dataclass(frozen=True)
class RunConfig:
    n: int
    params: MMPParams
    reduction: str = "none"
    initial: InitialSpec = field(default_factory=InitialSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    monitors: MonitorSpec = field(default_factory=MonitorSpec)
    output_dir: str = "mmp_output"

    @property
    def dt(self) -> float:
        s = self.solver
        return s.dt if s.method == "imex" else s.T / s.M

    @property
    def steps(self) -> int:
        s = self.solver
        if s.method == "picard":
            return s.M
        return int(round(s.T / s.dt)) if s.T > 0 else 0

    def picard_config(self) -> PicardConfig:
        s = self.solver
        return PicardConfig(s.T, s.M, s.s, s.max_iters, s.cauchy_tol, s.truncation_offset)


# ----------------------------------------------------------------------------
# schema: section -> key -> converter

def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _mode(text: str) -> tuple[int, int, int]:
    parts = tuple(_int(t) for t in text.replace(",", " ").split())
    if len(parts) != 3:
        raise ValueError("mode needs three integers")
    return parts


def _str(text: str) -> str:
    return text.strip()


SCHEMA = {
    "grid": {"n": _int},
    "params": {"mu": _float, "chi": _float, "kappa": _float, "gamma": _float, "nu": _float, "reduction": _str},
    "initial": {
        "preset": _str,
        "amp_u": _float,
        "amp_omega": _float,
        "amp_b": _float,
        "seed": _int,
        "kmax": _float,
        "mode": _mode,
    },
    "solver": {
        "method": _str,
        "T": _float,
        "dt": _float,
        "M": _int,
        "s": _float,
        "max_iters": _int,
        "cauchy_tol": _float,
        "truncation_offset": _int,
    },
    "monitors": {
        "cadence": _int,
        "snapshot_stride": _int,
        "hs": _floats,
        "lp": _floats,
        "epsilons": _floats,
        "warn_threshold": _float,
    },
    "output": {"dir": _str},
}
REQUIRED = {"grid": ("n",), "params": ("mu", "chi", "kappa", "gamma", "nu"), "solver": ("T",)}


def _locate(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of a section header, or of a key inside that section."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return lineno
        elif key is not None and current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return lineno
    return None


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__", inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive (T, M)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigParseError("duplicate key", line=exc.lineno, key=exc.option) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigParseError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("key outside any section", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigParseError("malformed line", line=line) from None

    raw: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigParseError(f"unknown section [{section}]", line=_locate(text, section))
        raw[section] = {}
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigParseError(f"unknown key in [{section}]", line=_locate(text, section, key), key=key)
            try:
                raw[section][key] = SCHEMA[section][key](value)
            except ValueError as exc:
                raise ConfigParseError(f"bad value {value!r}: {exc}", line=_locate(text, section, key), key=key) from None
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in raw.get(section, {}):
                raise ConfigParseError(f"missing required key in [{section}]", key=key)
    return _build(raw)


def parse_config(path) -> RunConfig:
    return parse_config_text(Path(path).read_text())


def _build(raw: dict) -> RunConfig:
    prm = dict(raw["params"])
    reduction = prm.pop("reduction", "none")
    try:
        params = MMPParams(**prm)
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from None
    cfg = RunConfig(
        n=raw["grid"]["n"],
        params=params,
        reduction=reduction,
        initial=InitialSpec(**raw.get("initial", {})),
        solver=SolverSpec(**raw.get("solver", {})),
        monitors=MonitorSpec(**raw.get("monitors", {})),
        output_dir=raw.get("output", {}).get("dir", "mmp_output"),
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def fail(msg):
        raise ConfigValidationError(msg)

    if cfg.n < 8 or cfg.n % 2:
        fail("n must be an even integer >= 8")
    if cfg.reduction not in REDUCTIONS:
        fail(f"reduction must be one of {', '.join(REDUCTIONS)}")
    ini = cfg.initial
    if ini.preset not in PRESETS:
        fail(f"preset must be one of {', '.join(PRESETS)}")
    if not all(math.isfinite(a) for a in (ini.amp_u, ini.amp_omega, ini.amp_b)):
        fail("amplitudes must be finite")
    if not ini.kmax > 0:
        fail("kmax must be positive")
    if ini.preset == "single_mode" and (not any(ini.mode) or max(map(abs, ini.mode)) >= cfg.n // 2):
        fail("mode must be a nonzero wavevector below the Nyquist index")
    sol = cfg.solver
    if sol.method not in METHODS:
        fail(f"method must be one of {', '.join(METHODS)}")
    if not (math.isfinite(sol.T) and sol.T >= 0):
        fail("T must be non-negative")
    if sol.method == "imex":
        if sol.dt is None or not sol.dt > 0:
            fail("dt must be positive")
        if sol.T > 0 and abs(round(sol.T / sol.dt) * sol.dt - sol.T) > 1e-9 * max(1.0, sol.T):
            fail("T must be a multiple of dt")
        if not sol.s > 1.5:
            fail("s must exceed 3/2")
    else:
        if sol.M is None:
            fail("picard needs M")
        cfg.picard_config()  # raises ConfigValidationError on violations
    mon = cfg.monitors
    if mon.cadence < 1:
        fail("cadence must be a positive integer")
    if mon.snapshot_stride < 0:
        fail("snapshot_stride must be non-negative")
    if any(not e > 0 for e in mon.epsilons):
        fail("epsilons must be positive")
    if any(not (1.5 < p < math.inf) for p in mon.lp):
        fail("lp exponents must lie in (3/2, inf)")
    if math.isnan(mon.warn_threshold) or mon.warn_threshold < 0:
        fail("warn_threshold must be non-negative")


# ----------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_sections(cfg: RunConfig) -> dict[str, dict[str, object]]:
    """Nested dict mirroring the file layout; ``None`` entries are omitted."""
    params = dict(zip(("mu", "chi", "kappa", "gamma", "nu"), cfg.params.as_tuple()))
    params["reduction"] = cfg.reduction
    sections = {
        "grid": {"n": cfg.n},
        "params": params,
        "initial": asdict(cfg.initial),
        "solver": {f.name: getattr(cfg.solver, f.name) for f in fields(cfg.solver)},
        "monitors": asdict(cfg.monitors),
        "output": {"dir": cfg.output_dir},
    }
    return {name: {k: v for k, v in body.items() if v is not None} for name, body in sections.items()}


def serialize(cfg: RunConfig) -> str:
    lines = []
    for name, body in to_sections(cfg).items():
        lines.append(f"[{name}]")
        for key, value in body.items():
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)

"""Run configuration: INI-style text to a validated :class:`RunConfig`.

Grammar (``configparser``)::

    [run]       mode, output, seed
    [model]     lambda, omega, delta, kappa, flux, theta, alpha_mag, lattice_size
    [grids]     q_max, n_kx, n_nu, l_open, n_ky, min_width, edge_fraction, edge_threshold
    [dynamics]  h, t_max, sample_every, stepper, filling, occupied, boost,
                packet_width, alpha0, fluctuations, max_trace_drift

``flux`` is written ``p/q``; ``occupied`` is ``m,n; m,n; ...``; ``boost`` is
``qx, qy``; ``alpha0`` is a Python complex literal such as ``1+0j``.
Omitted keys take the documented defaults and each default is logged.
"""

from __future__ import annotations

import configparser
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .dynamics import STEPPERS, InitialStateSpec
from .lattice import ModelParams, ParameterError, parse_flux

logger = logging.getLogger(__name__)

MODES = ("butterfly", "edges", "evolve")


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key and its line (if known)."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = ""
        if key is not None:
            where = f"{key}"
            if line is not None:
                where += f" (line {line})"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.key = key
        self.line = line


def _real(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _pair(text: str) -> tuple[float, float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 2:
        raise ValueError("expected two numbers")
    return (_real(parts[0]), _real(parts[1]))


def _sites(text: str):
    t = text.strip()
    if t.lower() in ("", "default", "corner"):
        return None
    out = []
    for chunk in t.split(";"):
        if not chunk.strip():
            continue
        m, n = (int(v) for v in chunk.split(","))
        out.append((m, n))
    return tuple(out)


def _complex(text: str) -> complex:
    v = complex(text.replace(" ", ""))
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise ValueError("not finite")
    return v


def _optional_real(text: str):
    if text.strip().lower() in ("none", "off", ""):
        return None
    return _real(text)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "mode": (str, None),
        "output": (str, None),
        "seed": (_int, 0),
    },
    "model": {
        "lambda": (_real, 1.0),
        "omega": (_real, 1.0),
        "delta": (_real, 0.0),
        "kappa": (_real, 1.0),
        "flux": (parse_flux, Fraction(0)),
        "theta": (_real, 0.0),
        "alpha_mag": (_real, 1.0),
        "lattice_size": (_int, 4),
    },
    "grids": {
        "q_max": (_int, 10),
        "n_kx": (_int, 200),
        "n_nu": (_int, 200),
        "l_open": (_int, 50),
        "n_ky": (_int, 200),
        "min_width": (_real, 0.05),
        "edge_fraction": (_real, 0.2),
        "edge_threshold": (_real, 0.5),
    },
    "dynamics": {
        "h": (_real, 0.01),
        "t_max": (_real, 100.0),
        "sample_every": (_int, 10),
        "stepper": (str, "rk4"),
        "filling": (_real, 0.25),
        "occupied": (_sites, None),
        "boost": (_pair, (math.pi / 2, math.pi / 2)),
        "packet_width": (_real, 0.6),
        "alpha0": (_complex, 0j),
        "fluctuations": (_bool, True),
        "max_trace_drift": (_optional_real, 1e-3),
    },
}


@dataclass(frozen=True)
class Grids:
    q_max: int = 10
    n_kx: int = 200
    n_nu: int = 200
    l_open: int = 50
    n_ky: int = 200
    min_width: float = 0.05
    edge_fraction: float = 0.2
    edge_threshold: float = 0.5


@dataclass(frozen=True)
class DynamicsConfig:
    h: float = 0.01
    t_max: float = 100.0
    sample_every: int = 10
    stepper: str = "rk4"
    initial: InitialStateSpec = field(default_factory=InitialStateSpec)
    fluctuations: bool = True
    max_trace_drift: float | None = 1e-3


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: ModelParams
    grids: Grids
    dynamics: DynamicsConfig
    output_path: str | None = None
    seed: int = 0
    resolved: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        """Fully resolved values, JSON-serialisable."""
        return _jsonable(self.resolved)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _line_of(text: str, section: str, key: str) -> int | None:
    """1-based line where ``key`` is set inside ``[section]``."""
    current = None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and pat.match(line):
            return no
    return None


def _section_line(text: str, section: str) -> int | None:
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m and m.group(1).strip().lower() == section:
            return no
    return None


def _split_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value", key=item)
    key, value = item.split("=", 1)
    key = key.strip().lower()
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigError("unknown override key", key=key)
        return section, name, value.strip()
    hits = [s for s, keys in SCHEMA.items() if key in keys]
    if len(hits) != 1:
        raise ConfigError("unknown override key" if not hits else "ambiguous key; use section.key", key=key)
    return hits[0], key, value.strip()


def parse_config(text: str, mode: str | None = None, overrides=()) -> RunConfig:
    """Parse and validate a configuration.

    ``mode`` (from the command line) takes precedence over ``[run] mode``.
    ``overrides`` are ``key=value`` or ``section.key=value`` strings applied
    after the file.
    """
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed configuration: {exc}", line=line) from exc

    raw: dict[str, dict[str, tuple[str, int | None]]] = {}
    for section in cp.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError("unknown section", key=f"[{section}]", line=_section_line(text, sec))
        for key, value in cp.items(section):
            if key not in SCHEMA[sec]:
                raise ConfigError("unknown key", key=f"{sec}.{key}", line=_line_of(text, sec, key))
            raw.setdefault(sec, {})[key] = (value, _line_of(text, sec, key))
    for item in overrides:
        sec, key, value = _split_override(item)
        raw.setdefault(sec, {})[key] = (value, None)

    values: dict[str, dict] = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default) in keys.items():
            if key in raw.get(sec, {}):
                text_value, line = raw[sec][key]
                try:
                    values[sec][key] = conv(text_value)
                except (ValueError, ParameterError) as exc:
                    raise ConfigError(str(exc) or "invalid value", key=f"{sec}.{key}", line=line) from exc
            else:
                values[sec][key] = default
                if default is not None:
                    logger.info("%s.%s not set; using default %r", sec, key, default)

    run_mode = mode or values["run"]["mode"]
    if run_mode is None:
        raise ConfigError("missing required key", key="run.mode")
    run_mode = run_mode.strip().lower()
    if run_mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}", key="run.mode", line=_line_of(text, "run", "mode"))
    values["run"]["mode"] = run_mode

    def line(sec, key):
        return _line_of(text, sec, key)

    m = values["model"]
    if m["kappa"] <= 0:
        raise ConfigError("kappa must be > 0", key="model.kappa", line=line("model", "kappa"))
    try:
        params = ModelParams(
            lam=m["lambda"],
            omega=m["omega"],
            delta=m["delta"],
            kappa=m["kappa"],
            flux=m["flux"],
            theta=m["theta"],
            alpha_mag=m["alpha_mag"],
            lattice_size=m["lattice_size"],
        )
    except ParameterError as exc:
        key = _guess_model_key(str(exc))
        raise ConfigError(str(exc), key=f"model.{key}" if key else None,
                          line=line("model", key) if key else None) from exc

    g = values["grids"]
    for key in ("q_max", "n_kx", "n_nu", "l_open", "n_ky"):
        if g[key] < 1:
            raise ConfigError("must be >= 1", key=f"grids.{key}", line=line("grids", key))
    if g["min_width"] < 0:
        raise ConfigError("must be >= 0", key="grids.min_width", line=line("grids", "min_width"))
    for key in ("edge_fraction", "edge_threshold"):
        if not 0 < g[key] <= 1:
            raise ConfigError("must be in (0, 1]", key=f"grids.{key}", line=line("grids", key))
    grids = Grids(**g)

    d = values["dynamics"]
    for key in ("h", "t_max"):
        if d[key] <= 0:
            raise ConfigError("must be > 0", key=f"dynamics.{key}", line=line("dynamics", key))
    if d["sample_every"] < 1:
        raise ConfigError("must be >= 1", key="dynamics.sample_every", line=line("dynamics", "sample_every"))
    if d["stepper"] not in STEPPERS:
        raise ConfigError(f"must be one of {sorted(STEPPERS)}", key="dynamics.stepper",
                          line=line("dynamics", "stepper"))
    if d["packet_width"] < 0:
        raise ConfigError("must be >= 0", key="dynamics.packet_width", line=line("dynamics", "packet_width"))
    initial = InitialStateSpec(
        occupied=d["occupied"],
        filling=d["filling"],
        boost=d["boost"],
        packet_width=d["packet_width"],
        alpha0=d["alpha0"],
    )
    try:
        initial.sites(params.lattice_size)
    except (ParameterError, IndexError) as exc:
        key = "occupied" if d["occupied"] is not None else "filling"
        raise ConfigError(str(exc), key=f"dynamics.{key}", line=line("dynamics", key)) from exc
    dyn = DynamicsConfig(
        h=d["h"],
        t_max=d["t_max"],
        sample_every=d["sample_every"],
        stepper=d["stepper"],
        initial=initial,
        fluctuations=d["fluctuations"],
        max_trace_drift=d["max_trace_drift"],
    )
    values["model"]["flux"] = params.flux
    values["model"]["theta"] = params.theta
    return RunConfig(
        mode=run_mode,
        params=params,
        grids=grids,
        dynamics=dyn,
        output_path=values["run"]["output"],
        seed=values["run"]["seed"],
        resolved=values,
    )


def _guess_model_key(message: str) -> str | None:
    names = {"lam": "lambda", "lambda": "lambda", "omega": "omega", "kappa": "kappa",
             "delta": "delta", "theta": "theta", "alpha_mag": "alpha_mag",
             "lattice_size": "lattice_size", "flux": "flux"}
    for token, key in names.items():
        if token in message:
            return key
    return None

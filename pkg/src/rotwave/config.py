"""Plain-text ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment; ``include <path>`` (or
``include = <path>``) splices another file, resolved relative to the file
that names it.  Later assignments win.  Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


def _float(text):
    """A float, or a product of floats and ``pi`` such as ``2*pi*16``."""
    value = 1.0
    for part in text.replace(" ", "").split("*"):
        if part == "pi":
            value *= math.pi
        else:
            try:
                value *= float(part)
            except ValueError:
                raise ConfigError(f"not a number: {text!r}") from None
    return value


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _ints(text):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(_int(lo), _int(hi) + 1))
    return tuple(_int(t) for t in text.split(",") if t.strip())


def _optional_int(text):
    return None if text.lower() in ("", "none") else _int(text)


def _text(text):
    return text


PROFILES = ("horizontal_gaussian", "radial_gaussian", "localized_bump")


@dataclass(frozen=True)
class RunConfig:
    # grid and time stepping
    n: int = 32
    box_length: float = 2 * math.pi * 16
    dt: float = 0.01
    t_end: float = 1.0
    rotation: bool = True
    dealias: bool = True
    formulation: str = "velocity"
    stride: int = 10
    snapshot_stride: int = 0
    hs: float = 2.0
    # data
    seed: int = 0
    eps: float = 0.05
    k0: float = 0.25
    width: float = 0.1
    max_index: int | None = None
    rings: tuple = ()
    # lifespan sweep
    eps_list: tuple = (0.05, 0.1, 0.2)
    seeds: tuple = (0, 1, 2, 3, 4)
    factor: float = 2.0
    check_stride: int = 1
    # decay study
    profile: str = "horizontal_gaussian"
    band_k: int = 0
    times: tuple = tuple(10.0 * 10.0 ** (i / 6.0) for i in range(7))
    n_rho: int = 128
    n_lam: int = 128
    lam0: float = 0.5
    x_set: str = "similarity"
    # verification
    suite: str = ""
    samples: int = 1000
    # io
    out: str = "out"
    snapshot: str = ""

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.t_end >= 0:
            raise ConfigError("t_end must be nonnegative")
        if self.formulation not in ("velocity", "dispersive"):
            raise ConfigError("formulation must be velocity or dispersive")
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {PROFILES}")
        if self.x_set not in ("similarity", "origin"):
            raise ConfigError("x_set must be similarity or origin")

    def sim_config(self, **overrides):
        from .solver import SimConfig

        cfg = SimConfig(
            n=self.n,
            box_length=self.box_length,
            dt=self.dt,
            t_end=self.t_end,
            rotation_on=self.rotation,
            dealias_on=self.dealias,
            formulation=self.formulation,
            stride=self.stride,
            snapshot_stride=self.snapshot_stride,
            seed=self.seed,
            amplitude=self.eps,
            k0=self.k0,
            width=self.width,
            max_index=self.max_index,
            rings=self.rings or None,
            hs=self.hs,
        )
        return replace(cfg, **overrides)

    def echo(self):
        """The resolved configuration as ``key = value`` lines, in field order."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif value is None:
                value = "none"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    "n": _int,
    "box_length": _float,
    "dt": _float,
    "t_end": _float,
    "rotation": _bool,
    "dealias": _bool,
    "formulation": _text,
    "stride": _int,
    "snapshot_stride": _int,
    "hs": _float,
    "seed": _int,
    "eps": _float,
    "k0": _float,
    "width": _float,
    "max_index": _optional_int,
    "rings": _ints,
    "eps_list": _floats,
    "seeds": _ints,
    "factor": _float,
    "check_stride": _int,
    "profile": _text,
    "band_k": _int,
    "times": _floats,
    "n_rho": _int,
    "n_lam": _int,
    "lam0": _float,
    "x_set": _text,
    "suite": _text,
    "samples": _int,
    "out": _text,
    "snapshot": _text,
}
_PATH_KEYS = ("out", "snapshot")


def parse_lines(text, base_dir, seen=None):
    """Raw ``{key: (value, base_dir)}`` from config text, following includes."""
    seen = set() if seen is None else seen
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include"):
            rest = line[len("include") :].strip()
            if rest.startswith("="):
                rest = rest[1:].strip()
            if not rest:
                raise ConfigError(f"line {lineno}: include needs a path")
            values.update(load_raw(Path(base_dir) / rest, seen))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = (value, Path(base_dir))
    return values


def load_raw(path, seen=None):
    seen = set() if seen is None else seen
    path = Path(path).resolve()
    if path in seen:
        raise ConfigError(f"include cycle through {path}")
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_lines(path.read_text(), path.parent, seen | {path})


def build(raw, overrides=None):
    """A :class:`RunConfig` from raw values; paths resolved against their file."""
    kwargs = {}
    for key, (value, base) in raw.items():
        parsed = _PARSERS[key](value)
        if key in _PATH_KEYS and parsed:
            parsed = str((base / parsed).resolve())
        kwargs[key] = parsed
    for key, value in (overrides or {}).items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        kwargs[key] = value
    if kwargs.get("out", RunConfig.out):
        kwargs["out"] = str(Path(kwargs.get("out", RunConfig.out)).resolve())
    if kwargs.get("snapshot"):
        kwargs["snapshot"] = str(Path(kwargs["snapshot"]).resolve())
    return RunConfig(**kwargs)


def load(path=None, overrides=None):
    raw = {} if path is None else load_raw(path)
    return build(raw, overrides)


def loads(text, base_dir=".", overrides=None):
    return build(parse_lines(text, base_dir), overrides)

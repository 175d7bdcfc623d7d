"""Run configuration: dataclass, key=value files and validation."""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid or unparsable configuration."""


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    out = []
    for v in text.replace(",", " ").split():
        f = float(v)
        if f != int(f):
            raise ValueError(f"{v!r} is not an integer")
        out.append(int(f))
    return tuple(out)


def _int(text: str) -> int:
    vals = _ints(text)
    if len(vals) != 1:
        raise ValueError("expected a single integer")
    return vals[0]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"{text!r} is not on/off")


def _optional_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(t)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a run or study.

    ``gamma_deg``, ``p`` and ``N`` are lists; commands loop over every
    combination in the order given.
    """

    gamma_deg: tuple = (45.0,)
    x0: float = 0.2001
    p: tuple = (1,)
    N: tuple = (20, 40, 80, 160)
    T: float = 0.3
    cfl: float = 0.4
    stabilization: bool = True
    omega: float | None = None  # None: 1/(2p+1)
    output_dir: str = "out"
    seed: int = 0
    samples: int = 100
    eig_N: int = 10

    def __post_init__(self):
        for name in ("gamma_deg", "p", "N"):
            v = getattr(self, name)
            if not isinstance(v, tuple):
                object.__setattr__(self, name, tuple(v) if hasattr(v, "__iter__") else (v,))
        self.validate()

    def validate(self):
        if not self.gamma_deg or any(not 0.0 < g < 90.0 for g in self.gamma_deg):
            raise ConfigError("gamma must lie in (0, 90) degrees")
        if not 0.0 < self.x0 < 1.0:
            raise ConfigError("x0 must lie in (0, 1)")
        if not self.p or any(p not in (1, 2, 3) for p in self.p):
            raise ConfigError("p must be 1, 2 or 3")
        if not self.N or any(n < 2 for n in self.N):
            raise ConfigError("every N must be at least 2")
        if any(b <= a for a, b in zip(self.N, self.N[1:])):
            raise ConfigError("N list must be strictly increasing")
        if not (math.isfinite(self.T) and self.T >= 0.0):
            raise ConfigError("T must be finite and non-negative")
        if not (math.isfinite(self.cfl) and self.cfl > 0.0):
            raise ConfigError("cfl must be positive")
        if self.omega is not None and not (math.isfinite(self.omega) and self.omega > 0.0):
            raise ConfigError("omega must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not 2 <= self.eig_N <= 12:
            raise ConfigError("eig_N must lie in [2, 12]")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Canonical key=value form; ``from_text`` inverts it exactly."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                s = " ".join(repr(x) for x in v)
            elif isinstance(v, bool):
                s = "on" if v else "off"
            elif v is None:
                s = "auto"
            elif isinstance(v, float):
                s = repr(v)
            else:
                s = str(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        """Parse ``key = value`` lines (``#`` comments allowed) over ``base``."""
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string("[config]\n" + text)
        except configparser.Error as err:
            raise ConfigError(f"cannot parse config: {err}") from err
        return (base or cls()).update(dict(parser["config"]))

    def update(self, values: dict) -> "RunConfig":
        """Return a copy with string ``values`` parsed and applied."""
        known = {f.name for f in dataclasses.fields(self)}
        changes = {}
        for key, text in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                changes[key] = _PARSERS[key](str(text))
            except (TypeError, ValueError) as err:
                raise ConfigError(f"bad value for {key}: {text!r} ({err})") from err
        return self.replace(**changes)


_PARSERS = {
    "gamma_deg": _floats,
    "x0": float,
    "p": _ints,
    "N": _ints,
    "T": float,
    "cfl": float,
    "stabilization": _bool,
    "omega": _optional_float,
    "output_dir": str.strip,
    "seed": _int,
    "samples": _int,
    "eig_N": _int,
}


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    return RunConfig.from_text(text, base)

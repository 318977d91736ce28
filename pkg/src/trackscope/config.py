"""Run configuration: defaults, key=value config files and validation."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    out: str = "out"
    corpus: list[str] = field(default_factory=list)
    suffix_list: str | None = None
    include_private: bool = False
    labels: str | None = None
    categories: str | None = None
    indicators: str | None = None
    country_tlds: str | None = None
    seed: int = 0
    workers: int = 1
    damping: float = 0.85
    tol: float = 1e-10
    max_iter: int = 200
    dangling: str = "uniform"
    powerlaw_method: str = "auto"
    permutations: int = 1000
    g2_alpha: float = 0.01
    bonferroni: bool = True
    resolutions: list[float] = field(default_factory=lambda: [0.5, 0.75, 1.0, 1.25, 1.5])
    grid_seeds: int = 10
    core_order: str = "pre"
    weighted: bool = True
    top_n: int = 20
    condprob_top: int = 15
    prevalence_top: int = 20
    prevalence_level: str = "company"
    dominant_companies: list[str] = field(default_factory=lambda: ["Google", "Facebook", "Twitter"])

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def embedded(self) -> dict:
        """The config as stored in reports: output location and worker count do not affect results."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def validate(self, needs: tuple[str, ...] = ()):
        """Range checks, plus existence of the input paths named in ``needs``."""
        if not 0 < self.damping < 1:
            raise ConfigError("damping must lie in (0, 1)")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.dangling not in ("uniform", "self"):
            raise ConfigError("dangling must be 'uniform' or 'self'")
        if self.powerlaw_method not in ("auto", "approx", "zeta"):
            raise ConfigError("powerlaw_method must be auto, approx or zeta")
        if self.permutations < 1:
            raise ConfigError("permutations must be positive")
        if not 0 < self.g2_alpha < 1:
            raise ConfigError("g2_alpha must lie in (0, 1)")
        if not self.resolutions or any(r <= 0 for r in self.resolutions):
            raise ConfigError("resolutions must be a nonempty list of positive numbers")
        if self.grid_seeds < 1:
            raise ConfigError("grid_seeds must be positive")
        if self.core_order not in ("pre", "post"):
            raise ConfigError("core_order must be 'pre' or 'post'")
        if self.prevalence_level not in ("company", "pld"):
            raise ConfigError("prevalence_level must be 'company' or 'pld'")
        for name in ("top_n", "condprob_top", "prevalence_top", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.dominant_companies:
            raise ConfigError("dominant_companies must be nonempty")
        for name in ("suffix_list", "country_tlds") + tuple(needs):
            value = getattr(self, name)
            if name == "corpus":
                if not value:
                    raise ConfigError("no corpus path given")
                for p in value:
                    if not Path(p).exists():
                        raise ConfigError(f"corpus path {p} does not exist")
                continue
            if value is None:
                if name in needs:
                    raise ConfigError(f"--{name.replace('_', '-')} is required")
                continue
            if not Path(value).exists():
                raise ConfigError(f"{name.replace('_', '-')} file {value} does not exist")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def coerce(name: str, raw: Any) -> Any:
    """Convert a textual value to the type of config field ``name``."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    if not isinstance(raw, str):
        return raw
    kind = str(_FIELDS[name].type)
    text = raw.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "list[float]":
            return [float(v) for v in text.split(",") if v.strip()]
        if kind == "list[str]":
            return [v.strip() for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return text or None if kind == "str | None" else text


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys read as underscores."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = coerce(key, value)
    return out


def build_config(file_values: dict[str, Any] | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Defaults, then config-file values, then explicit overrides (None means unset)."""
    cfg = RunConfig()
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            setattr(cfg, key, coerce(key, value))
    return cfg

"""Run configuration, read from a ``key = value`` file and overridable from the CLI."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from . import kvfile
from .errors import ConfigError

DATASETS = ("vertex", "teacher", "synthetic")


@dataclass(frozen=True)
class RunConfig:
    topology: str = ""
    activation: str = "tanh"
    eta: float = 1e-2
    s: float = 0.5
    iterations: int = 2000
    seed: int = 0
    optimizer: str = "adaptive"
    momentum: float = 0.95
    # vertex | teacher | synthetic | pgm:<directory>
    dataset: str = "vertex"
    samples: int = 20
    image_rows: int = 16
    image_cols: int = 16
    data_seed: int = 0
    train_count: int = 200
    test_count: int = 40
    init_scale: float = 1.0
    tail_threshold: float = 1e-4
    tail_window: int = 10
    early_stop: bool = False
    C: Optional[float] = None
    codes: list[int] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    output_dir: str = "runs"
    base_dir: str = ""

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0 < self.s < 1:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.iterations}")
        if self.optimizer not in ("adaptive", "fixed"):
            raise ConfigError(f"optimizer must be 'adaptive' or 'fixed', got {self.optimizer!r}")
        if not (self.dataset in DATASETS or self.dataset.startswith("pgm:")):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if not self.topology:
            raise ConfigError("a topology file is required")
        if self.tail_threshold <= 0 or self.tail_window < 1:
            raise ConfigError("tail_threshold must be positive and tail_window at least 1")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.base_dir:
            p = Path(self.base_dir) / p
        return p

    @property
    def topology_path(self) -> Path:
        return self.resolve(self.topology)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def fingerprint(self) -> str:
        """Hash of everything that influences results; excludes output location.

        The topology is hashed by content, not path.
        """
        from . import topology as topo

        d = asdict(self)
        for key in ("output_dir", "base_dir", "topology"):
            d.pop(key)
        try:
            d["topology_hash"] = topo.load(self.topology_path).fingerprint()
        except OSError:
            d["topology_hash"] = None
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value: Any) -> Any:
    kind = _FIELD_TYPES[name]
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "bool":
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if kind == "Optional[float]":
            return None if value in (None, "none", "null") else float(value)
        if kind == "list[int]":
            if isinstance(value, str):
                value = kvfile.parse_value(value)
            if isinstance(value, int):
                value = [value]
            return [int(v) for v in value]
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def from_dict(entries: dict[str, Any], base_dir: str = "") -> RunConfig:
    unknown = set(entries) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = {k: _coerce(k, v) for k, v in entries.items()}
    values.setdefault("base_dir", base_dir)
    return RunConfig(**values)


def load(path: str | Path, **overrides: Any) -> RunConfig:
    """Read a config file; relative paths inside it resolve against its directory."""
    path = Path(path)
    entries = kvfile.load(path)
    entries.update({k: v for k, v in overrides.items() if v is not None})
    return from_dict(entries, base_dir=str(path.parent))


def dumps(cfg: RunConfig) -> str:
    d = asdict(cfg)
    d.pop("base_dir")
    return kvfile.dumps(d)

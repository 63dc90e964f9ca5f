"""
Run configuration: one JSON file plus command-line overrides (flags win).

Example::

    {
      "protein": "protein.mol", "ligand": "ligand.mol",
      "grid": {"origin": [0, 0, 0], "spacing": 1.0, "dims": [4, 4, 4]},
      "registers": {"nt": "auto", "ng": "auto"},
      "mode": "amplitude", "shots": null, "seed": 0,
      "offset": "auto",
      "batch": {"shifts": {"x": [0, 1]}, "turns": {"z": [0, 1]}},
      "dielectric": "vacuum", "slope": 1.0, "units": "physical", "clamp": 10000.0,
      "backend": "householder"
    }

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .encoding import EncodingError, check_registers
from .forcefield import coulomb_prefactor
from .gridmap import AXES, DEFAULT_CLAMP, GridSpec


class ConfigError(ValueError):
    pass


_PATH_KEYS = ("protein", "ligand", "maps", "out")


@dataclass
class RunConfig:
    protein: str | None = None
    ligand: str | None = None
    maps: str | None = None
    out: str | None = None
    grid: dict = field(default_factory=lambda: {"origin": [0.0, 0.0, 0.0], "spacing": 1.0, "dims": [4, 4, 4]})
    registers: dict = field(default_factory=lambda: {"nt": "auto", "ng": "auto"})
    mode: str = "amplitude"
    shots: int | None = None
    seed: int | None = 0
    offset: str | float = "auto"
    batch: dict = field(default_factory=lambda: {"shifts": {}, "turns": {}})
    dielectric: str = "vacuum"
    slope: float = 1.0
    units: str = "physical"
    clamp: float | None = DEFAULT_CLAMP
    backend: str = "householder"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if isinstance(self.clamp, str):
            if self.clamp.lower() != "none":
                raise ConfigError(f"clamp must be a number or none, got {self.clamp!r}")
            self.clamp = None
        elif self.clamp is not None:
            self.clamp = float(self.clamp)
        if self.mode not in ("amplitude", "sampled"):
            raise ConfigError(f"mode must be amplitude or sampled, got {self.mode!r}")
        if self.mode == "sampled" and (self.shots is None or int(self.shots) < 1):
            raise ConfigError("sampled mode needs shots >= 1")
        if self.units not in ("physical", "reduced"):
            raise ConfigError(f"units must be physical or reduced, got {self.units!r}")
        if self.dielectric not in ("vacuum", "distance"):
            raise ConfigError(f"dielectric must be vacuum or distance, got {self.dielectric!r}")
        if self.backend not in ("householder", "ry_tree"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.offset != "auto":
            try:
                self.offset = float(self.offset)
            except (TypeError, ValueError):
                raise ConfigError(f"offset must be auto or a number, got {self.offset!r}") from None
            if self.offset < 0:
                raise ConfigError("offset must be >= 0")
        for key in ("nt", "ng"):
            v = self.registers.get(key, "auto")
            if v != "auto" and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"registers.{key} must be auto or a positive integer, got {v!r}")
        for part in ("shifts", "turns"):
            spec = self.batch.get(part) or {}
            bad = set(spec) - set(AXES)
            if bad:
                raise ConfigError(f"batch.{part} has unknown axes {sorted(bad)}")
            if any(not isinstance(v, int) for vals in spec.values() for v in vals):
                raise ConfigError(f"batch.{part} values must be integers")
        try:
            self.grid_spec()
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad grid: {exc}") from None

    # -- derived ------------------------------------------------------------

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(tuple(float(v) for v in g["origin"]), float(g["spacing"]), tuple(int(v) for v in g["dims"]))

    @property
    def coulomb(self) -> float:
        return coulomb_prefactor(self.units == "reduced")

    @property
    def nt(self) -> int | None:
        v = self.registers.get("nt", "auto")
        return None if v == "auto" else v

    @property
    def ng(self) -> int | None:
        v = self.registers.get("ng", "auto")
        return None if v == "auto" else v

    def shifts(self) -> dict:
        return {a: list(v) for a, v in (self.batch.get("shifts") or {}).items()}

    def turns(self) -> dict:
        return {a: list(v) for a, v in (self.batch.get("turns") or {}).items()}

    def check_registers(self, n_types: int, n_grid: int, with_offset: bool) -> None:
        """Reject explicit register sizes that can not hold the problem."""
        nt = self.nt if self.nt is not None else 64
        ng = self.ng if self.ng is not None else 64
        try:
            check_registers(nt, ng, n_types, n_grid + int(with_offset))
        except EncodingError as exc:
            raise ConfigError(str(exc)) from None

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data = dict(data)
        if base_dir is not None:
            for key in _PATH_KEYS:
                if data.get(key) is not None:
                    data[key] = str(base_dir / data[key])
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data, path.parent)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with every non-``None`` override applied; nested dicts merge one level."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                merged = dict(data[key])
                merged.update(value)
                data[key] = merged
            else:
                data[key] = value
        return RunConfig(**data)

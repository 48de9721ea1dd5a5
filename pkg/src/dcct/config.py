"""RunConfig and its TOML representation.

Top-level keys mirror ``RunConfig`` field names; dataset fields live under a
``[data]`` table. ``--set`` overrides use the same names (``data.seed=3``).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .datagen import DatasetSpec
from .errors import ConfigError
from .schedule import ScheduleSpec

CLUSTERERS = {"dbscan": "dbscan_eps", "infomap": "infomap_psi", "kmeans": "kmeans_k"}


@dataclass(frozen=True)
class RunConfig:
    data: DatasetSpec = field(default_factory=DatasetSpec)
    d_hidden: int = 64
    d_out: int = 32
    tau: float = 0.05
    alpha: float = 0.99
    beta: float = 0.1
    clusterer: str = "dbscan"
    base: float = 0.5
    delta: float = 0.35
    epochs: int = 25
    iterations: int = 50
    gamma: float = 1.3
    p_ids: int = 8
    k_inst: int = 4
    lr: float = 0.1
    weight_decay: float = 5e-4
    lr_decay_every: int = 0  # 0: 20/50 of the epoch count, rounded
    lr_decay_factor: float = 0.1
    min_pts: int = 4
    k1: int = 30
    k2: int = 6
    jaccard_lambda: float = 0.0
    normalize_memory: bool = True
    query_fraction: float = 0.25
    seed: int = 0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    use_dcdp: bool = True
    use_csm: bool = True

    @property
    def schedule(self) -> ScheduleSpec:
        return ScheduleSpec(self.base, self.delta, self.epochs, CLUSTERERS[self.clusterer])

    @property
    def decay_every(self) -> int:
        return self.lr_decay_every or max(1, round(self.epochs * 20 / 50))

    def validate(self) -> "RunConfig":
        self.data.validate()
        if self.clusterer not in CLUSTERERS:
            raise ConfigError("clusterer", f"must be one of {sorted(CLUSTERERS)}")
        positive = ["d_hidden", "d_out", "tau", "epochs", "iterations", "gamma", "p_ids", "k_inst", "min_pts", "k1", "k2", "base"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        for name in ("alpha", "beta"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(name, "must lie in [0, 1)")
        for name in ("lr", "weight_decay", "jaccard_lambda", "lr_decay_every"):
            if not getattr(self, name) >= 0:
                raise ConfigError(name, "must be >= 0")
        if self.k2 > self.k1:
            raise ConfigError("k2", "must be <= k1")
        if self.k1 >= self.data.size:
            raise ConfigError("k1", f"must be < dataset size {self.data.size}")
        if not 0 < self.query_fraction < 1:
            raise ConfigError("query_fraction", "must lie in (0, 1)")
        if self.epochs < 2:
            raise ConfigError("epochs", "must be >= 2 for the parameter schedule")
        try:
            self.schedule
        except ConfigError as exc:
            raise ConfigError(exc.field if exc.field != "kind" else "clusterer", exc.message) from None
        if not self.seeds:
            raise ConfigError("seeds", "must not be empty")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_DATA_TYPES = {f.name: f.type for f in fields(DatasetSpec)}


def _coerce(name: str, typ: str, value):
    typ = str(typ)
    try:
        if typ == "bool":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "1", "yes", "on"):
                return True
            if isinstance(value, str) and value.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        if typ == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            if isinstance(value, bool):
                raise ValueError(value)
            return int(value)
        if typ == "float":
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
            return out
        if typ == "str":
            return str(value)
        if typ.startswith("tuple"):
            if isinstance(value, str):
                value = [v for v in value.replace("[", "").replace("]", "").split(",") if v.strip()]
            return tuple(int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot interpret {value!r} as {typ}") from None
    raise ConfigError(name, f"unsupported field type {typ}")


def from_dict(raw: dict, required: tuple[str, ...] = ()) -> RunConfig:
    for key in required:
        if key not in raw:
            raise ConfigError(key, "required field missing")
    kwargs = {}
    for key, value in raw.items():
        if key == "data":
            if not isinstance(value, dict):
                raise ConfigError("data", "must be a table")
            data = {}
            for dk, dv in value.items():
                if dk not in _DATA_TYPES:
                    raise ConfigError(f"data.{dk}", "unknown field")
                data[dk] = _coerce(f"data.{dk}", _DATA_TYPES[dk], dv)
            kwargs["data"] = DatasetSpec(**data)
        elif key in _FIELD_TYPES:
            kwargs[key] = _coerce(key, _FIELD_TYPES[key], value)
        else:
            raise ConfigError(key, "unknown field")
    return RunConfig(**kwargs).validate()


REQUIRED_KEYS = ("epochs", "iterations", "clusterer", "base", "delta")


def load(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    """Parse a TOML config, apply ``KEY=VALUE`` overrides, validate.

    ``REQUIRED_KEYS`` must appear in the file or the overrides.
    """
    text = Path(path).read_text()
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("toml", str(exc)) from None
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "override must look like KEY=VALUE")
        key = key.strip()
        if key.startswith("data."):
            raw.setdefault("data", {})[key[5:]] = value.strip()
        else:
            raw[key] = value.strip()
    return from_dict(raw, REQUIRED_KEYS)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw).validate()


def to_toml(cfg: RunConfig) -> str:
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return repr(v)

    d = cfg.to_dict()
    data = d.pop("data")
    lines = [f"{k} = {fmt(v)}" for k, v in d.items()]
    lines.append("")
    lines.append("[data]")
    lines.extend(f"{k} = {fmt(v)}" for k, v in data.items())
    return "\n".join(lines) + "\n"

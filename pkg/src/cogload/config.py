"""Run configuration: nested frozen dataclasses loadable from TOML or JSON.

Unknown keys are rejected with their full dotted path so typos cannot
silently fall back to defaults. Component invariants fire on construction
because every section is the component's own config dataclass.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .classifiers import KINDS
from .errors import ConfigError, InvalidParams
from .features import DEFAULT_INCLUDE_IPA
from .labels import DEFAULT_EDGES, check_edges
from .preprocess import CleaningConfig
from .selection import DEFAULT_WINDOWS, GridSpace, SplitConfig


@dataclass(frozen=True)
class LabelsConfig:
    edges: tuple = DEFAULT_EDGES

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        check_edges(edges)
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True)
class SchemaConfig:
    unimodal: bool = True
    multimodal: bool = True
    include_ipa_unimodal: Optional[bool] = None
    include_ipa_multimodal: Optional[bool] = None

    def __post_init__(self):
        if not (self.unimodal or self.multimodal):
            raise InvalidParams("schemas", "at least one of unimodal/multimodal must be enabled")

    def names(self) -> tuple[str, ...]:
        out = []
        if self.unimodal:
            out.append("unimodal")
        if self.multimodal:
            out.append("multimodal")
        return tuple(out)

    def include_ipa_map(self) -> dict:
        return {
            "unimodal": (DEFAULT_INCLUDE_IPA["unimodal"]
                         if self.include_ipa_unimodal is None else self.include_ipa_unimodal),
            "multimodal": (DEFAULT_INCLUDE_IPA["multimodal"]
                           if self.include_ipa_multimodal is None else self.include_ipa_multimodal),
        }


@dataclass(frozen=True)
class PipelineConfig:
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)
    labels: LabelsConfig = field(default_factory=LabelsConfig)
    schemas: SchemaConfig = field(default_factory=SchemaConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    grid: GridSpace = field(default_factory=GridSpace)
    windows: tuple = DEFAULT_WINDOWS
    kinds: tuple = KINDS
    kfold_k: int = 4
    select_by: str = "test_kappa"
    seed: int = 0
    out_dir: str = "cogload_out"

    def __post_init__(self):
        windows = tuple(float(w) for w in self.windows)
        if not windows or any(w <= 0 for w in windows):
            raise InvalidParams("windows", f"must be a non-empty list of positive seconds, got {self.windows}")
        if len(set(windows)) != len(windows):
            raise InvalidParams("windows", "duplicate window lengths")
        object.__setattr__(self, "windows", windows)
        kinds = tuple(self.kinds)
        unknown = [k for k in kinds if k not in KINDS]
        if unknown or not kinds:
            raise InvalidParams("kinds", f"must be a non-empty subset of {KINDS}, got {self.kinds}")
        object.__setattr__(self, "kinds", kinds)
        if self.kfold_k < 2:
            raise InvalidParams("kfold_k", f"must be >= 2, got {self.kfold_k}")
        if self.select_by not in ("test_kappa", "validation_kappa"):
            raise InvalidParams("select_by", f"must be test_kappa or validation_kappa, got {self.select_by!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidParams("seed", f"must be a non-negative integer, got {self.seed!r}")

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed, split=replace(self.split, seed=seed))


def _section_type(f: dataclasses.Field):
    """Dataclass type of a nested section, inferred from its default."""
    if f.default_factory is not dataclasses.MISSING:
        default = f.default_factory()
        if dataclasses.is_dataclass(default):
            return default.__class__
    elif f.default is not dataclasses.MISSING and dataclasses.is_dataclass(f.default):
        return f.default.__class__
    return None


def _from_mapping(cls, data: dict, path: str = ""):
    """Build a dataclass from a nested mapping, rejecting unknown keys."""
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        here = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown config key: {here}")
        section = _section_type(known[key])
        if section is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"{here}: expected a table/object")
            kwargs[key] = _from_mapping(section, value, here)
        elif isinstance(value, dict):
            raise ConfigError(f"{here}: unexpected table")
        elif isinstance(value, list):
            kwargs[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _read_mapping(path: str) -> dict:
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return data
    raise ConfigError(f"{path}: config must be .toml or .json")


def load_config(path: str) -> PipelineConfig:
    return _from_mapping(PipelineConfig, _read_mapping(path))


def load_mapping_into(cls, path: str):
    """Load any config dataclass (e.g. generator params) from TOML/JSON."""
    return _from_mapping(cls, _read_mapping(path))


def config_to_dict(cfg):
    return dataclasses.asdict(cfg) if dataclasses.is_dataclass(cfg) else cfg


def config_hash(cfg) -> str:
    """Stable short digest of the effective configuration. The output
    directory is excluded: where results land does not change what they are."""
    d = config_to_dict(cfg)
    if isinstance(d, dict):
        d.pop("out_dir", None)
    blob = json.dumps(d, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

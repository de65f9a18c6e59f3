"""
Experiment configuration.

Experiments are TOML files validated against a JSON schema (unknown keys are
rejected) and turned into an ExperimentConfig dataclass tree. The optional
``[smoke]`` table mirrors the top-level tables and is merged over them when
a shortened run is requested.
"""

import copy
import fnmatch
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import toml
from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from .config import EKI_DEFAULTS, RUNNER_DEFAULTS, STATISTICS_DEFAULTS
from .errors import ConfigError
from .funcparam import ParameterLayout
from .models import PriorSpec, StatisticsSpec, StoppingRule

logger = logging.getLogger(__name__)


# ==================== Schema ====================

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_COMPONENTS = {"type": "array", "items": {"type": "integer", "minimum": 0}}

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"type": "string"},
        "constants": {"type": "object"},
        "params": {"type": "object"},
    },
}

STATISTICS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "burn_in": {"type": "number", "minimum": 0},
        "averaging_window": _POSITIVE,
        "moments": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "terms": {"type": "array", "items": _COMPONENTS},
                "components": _COMPONENTS,
                "max_order": _COUNT,
                "kind": {"enum": ["all", "marginal"]},
                "cross": {"type": "array", "items": _COMPONENTS},
            },
        },
        "acf": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["component", "lags"],
                "properties": {
                    "component": {"type": "integer", "minimum": 0},
                    "lags": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                },
            },
        },
        "psd": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["component", "degree"],
                "properties": {
                    "component": {"type": "integer", "minimum": 0},
                    "degree": {"type": "integer", "minimum": 0},
                    "band": {"type": "array", "items": _POSITIVE, "minItems": 2, "maxItems": 2},
                },
            },
        },
    },
}

_PRIOR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["uniform", "normal"]},
        "low": _NUMBER,
        "high": _NUMBER,
        "mean": _NUMBER,
        "std": {"type": "number", "minimum": 0},
    },
}

_TABLES = {
    "model": _MODEL,
    "statistics": STATISTICS_SCHEMA,
    "simulation": {
        "type": "object",
        "additionalProperties": False,
        "properties": {"dt": _POSITIVE, "record_every": _COUNT},
    },
    "data": {
        "type": "object",
        "additionalProperties": False,
        "required": ["source"],
        "properties": {
            "source": {"enum": ["simulate", "file"]},
            "window": _POSITIVE,
            "dt": _POSITIVE,
            "record_every": _COUNT,
            "observe": _COMPONENTS,
            "truth": _MODEL,
            "standin": _MODEL,
            "file": {
                "type": "object",
                "additionalProperties": False,
                "required": ["path", "sampling_interval"],
                "properties": {
                    "path": {"type": "string"},
                    "column": {"type": ["string", "integer"]},
                    "sampling_interval": _POSITIVE,
                    "remove_mean": {"type": "boolean"},
                },
            },
        },
    },
    "gamma": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "n_batches": {"type": "integer", "minimum": 2},
            "kind": {"enum": ["full", "diagonal"]},
        },
    },
    "eki": {
        "type": "object",
        "additionalProperties": False,
        "required": ["prior"],
        "properties": {
            "ensemble_size": {"type": "integer", "minimum": 2},
            "max_gens": _COUNT,
            "perturb": {"type": "boolean"},
            "n_jobs": {"type": "integer"},
            "stopping": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["fixed", "discrepancy"]},
                    "tau": _POSITIVE,
                },
            },
            "prior": {"type": "object", "additionalProperties": _PRIOR},
        },
    },
    "validation": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "factor": _POSITIVE,
            "bins": _COUNT,
            "grid_points": {"type": "integer", "minimum": 2},
            "trajectory_every": {"type": "integer", "minimum": 0},
        },
    },
}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "model", "statistics", "data", "eki"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "requires_data": {"type": "boolean"},
        **_TABLES,
        "smoke": {
            "type": "object",
            "additionalProperties": False,
            "properties": {name: {"type": "object"} for name in _TABLES},
        },
    },
}


def _error_key(error) -> str:
    path = [str(part) for part in error.absolute_path]
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = set(error.schema.get("properties", {}))
        extra = sorted(k for k in error.instance if k not in allowed)
        if extra:
            path.append(extra[0])
    elif error.validator == "required" and isinstance(error.instance, dict):
        missing = [k for k in error.validator_value if k not in error.instance]
        if missing:
            path.append(missing[0])
    return ".".join(path) or "<root>"


def validate(data: Dict, schema: Dict = EXPERIMENT_SCHEMA):
    """Raise ConfigError naming the offending key of the most relevant violation."""
    error = best_match(Draft7Validator(schema).iter_errors(data))
    if error is not None:
        raise ConfigError(_error_key(error), error.message)


# ==================== Config tree ====================

@dataclass
class ModelConfig:
    """A registry name with constant overrides and (for truths) raw parameters."""
    name: str
    constants: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ModelConfig':
        return cls(
            name=data["name"],
            constants=dict(data.get("constants", {})),
            params=dict(data.get("params", {})),
        )


@dataclass
class FileSource:
    path: str
    sampling_interval: float
    column: Any = 0
    remove_mean: bool = False

    @classmethod
    def from_dict(cls, data: Dict) -> 'FileSource':
        return cls(
            path=data["path"],
            sampling_interval=float(data["sampling_interval"]),
            column=data.get("column", 0),
            remove_mean=bool(data.get("remove_mean", False)),
        )


@dataclass
class DataConfig:
    """Where y comes from: a simulated truth or a file (with a synthetic stand-in)."""
    source: str
    window: Optional[float] = None
    dt: Optional[float] = None
    record_every: Optional[int] = None
    observe: Optional[List[int]] = None
    truth: Optional[ModelConfig] = None
    standin: Optional[ModelConfig] = None
    file: Optional[FileSource] = None

    @classmethod
    def from_dict(cls, data: Dict) -> 'DataConfig':
        config = cls(
            source=data["source"],
            window=data.get("window"),
            dt=data.get("dt"),
            record_every=data.get("record_every"),
            observe=data.get("observe"),
            truth=ModelConfig.from_dict(data["truth"]) if "truth" in data else None,
            standin=ModelConfig.from_dict(data["standin"]) if "standin" in data else None,
            file=FileSource.from_dict(data["file"]) if "file" in data else None,
        )
        if config.source == "simulate" and config.truth is None:
            raise ConfigError("data.truth", "simulated data needs a truth model")
        if config.source == "file" and config.file is None:
            raise ConfigError("data.file", "file data needs a [data.file] table")
        return config


@dataclass
class EkiConfig:
    prior: Dict[str, Dict[str, Any]]
    ensemble_size: Optional[int] = None
    max_gens: int = EKI_DEFAULTS["max_gens"]
    perturb: bool = EKI_DEFAULTS["perturb"]
    n_jobs: int = EKI_DEFAULTS["n_jobs"]
    stopping: StoppingRule = field(default_factory=StoppingRule)

    @classmethod
    def from_dict(cls, data: Dict) -> 'EkiConfig':
        stopping = data.get("stopping", {})
        return cls(
            prior=dict(data["prior"]),
            ensemble_size=data.get("ensemble_size"),
            max_gens=int(data.get("max_gens", EKI_DEFAULTS["max_gens"])),
            perturb=bool(data.get("perturb", EKI_DEFAULTS["perturb"])),
            n_jobs=int(data.get("n_jobs", EKI_DEFAULTS["n_jobs"])),
            stopping=StoppingRule(
                stopping.get("kind", "fixed"),
                float(stopping.get("tau", EKI_DEFAULTS["discrepancy_tau"])),
            ),
        )

    def priors_for(self, layout: ParameterLayout) -> List[PriorSpec]:
        """One PriorSpec per layout slice, in layout order.

        Entries are matched by exact slice name first, then by glob pattern
        (``"*.obs_error"``); size and transform come from the layout.
        """
        priors = []
        for s in layout.slices:
            entry = self.prior.get(s.name)
            if entry is None:
                patterns = [p for p in self.prior if fnmatch.fnmatchcase(s.name, p)]
                if not patterns:
                    raise ConfigError(f"eki.prior.{s.name}", "no prior for this parameter")
                entry = self.prior[patterns[0]]
            try:
                priors.append(PriorSpec.from_dict(
                    s.name, {**entry, "size": s.size, "transform": s.transform},
                ))
            except ValueError as exc:
                raise ConfigError(f"eki.prior.{s.name}", str(exc)) from exc
        return priors


@dataclass
class ValidationConfig:
    factor: float = RUNNER_DEFAULTS["validation_factor"]
    bins: int = RUNNER_DEFAULTS["histogram_bins"]
    grid_points: int = RUNNER_DEFAULTS["function_grid_points"]
    trajectory_every: int = RUNNER_DEFAULTS["trajectory_dump_every"]

    @classmethod
    def from_dict(cls, data: Dict) -> 'ValidationConfig':
        return cls(
            factor=float(data.get("factor", RUNNER_DEFAULTS["validation_factor"])),
            bins=int(data.get("bins", RUNNER_DEFAULTS["histogram_bins"])),
            grid_points=int(data.get("grid_points", RUNNER_DEFAULTS["function_grid_points"])),
            trajectory_every=int(data.get("trajectory_every", RUNNER_DEFAULTS["trajectory_dump_every"])),
        )


@dataclass
class ExperimentConfig:
    """Validated experiment description."""
    name: str
    model: ModelConfig
    statistics: StatisticsSpec
    data: DataConfig
    eki: EkiConfig
    seed: int = 0
    output_dir: Optional[str] = None
    dt: Optional[float] = None
    record_every: int = 1
    n_batches: int = STATISTICS_DEFAULTS["gamma_batches"]
    gamma_kind: str = "full"
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    requires_data: bool = False

    @classmethod
    def from_dict(cls, data: Dict) -> 'ExperimentConfig':
        validate(data)
        try:
            statistics = StatisticsSpec.from_dict(data["statistics"])
        except ValueError as exc:
            raise ConfigError("statistics", str(exc)) from exc
        if statistics.averaging_window is None:
            raise ConfigError("statistics.averaging_window", "forward runs need an averaging window")
        if statistics.burn_in is None:
            raise ConfigError("statistics.burn_in", "forward runs need an explicit burn-in")
        if statistics.dimension == 0:
            raise ConfigError("statistics", "no statistics requested")
        simulation = data.get("simulation", {})
        return cls(
            name=data["name"],
            model=ModelConfig.from_dict(data["model"]),
            statistics=statistics,
            data=DataConfig.from_dict(data["data"]),
            eki=EkiConfig.from_dict(data["eki"]),
            seed=int(data.get("seed", 0)),
            output_dir=data.get("output_dir"),
            dt=simulation.get("dt"),
            record_every=int(simulation.get("record_every", 1)),
            n_batches=int(data.get("gamma", {}).get("n_batches", STATISTICS_DEFAULTS["gamma_batches"])),
            gamma_kind=data.get("gamma", {}).get("kind", "full"),
            validation=ValidationConfig.from_dict(data.get("validation", {})),
            requires_data=bool(data.get("requires_data", False)),
        )

    @property
    def truth_window(self) -> float:
        return self.data.window or self.statistics.averaging_window


# ==================== Loading ====================

def merge_tables(base: Dict, override: Dict) -> Dict:
    """Recursive dict merge; override wins, lists are replaced whole."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_tables(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_raw(path: str) -> Dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return toml.load(f)
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"config file not found: {path}") from exc
    except toml.TomlDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML in {path}: {exc}") from exc


def apply_overrides(
    raw: Dict,
    smoke: bool = False,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> Dict:
    """Fold the smoke table and command-line flags into a raw config."""
    validate(raw)
    data = {k: v for k, v in raw.items() if k != "smoke"}
    if smoke:
        data = merge_tables(data, raw.get("smoke", {}))
    if seed is not None:
        data["seed"] = seed
    if output_dir is not None:
        data["output_dir"] = output_dir
    return data


def load_config(
    path: str,
    smoke: bool = False,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> ExperimentConfig:
    """Load, validate and build an experiment config."""
    config = ExperimentConfig.from_dict(apply_overrides(load_raw(path), smoke, seed, output_dir))
    logger.info("loaded config %s (%s)%s", config.name, path, " [smoke]" if smoke else "")
    return config

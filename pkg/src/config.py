"""Configuration constants for the Jordan-algebra zeta toolkit."""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Final, Mapping, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv


# Define constants at module level for immutability
_FAMILIES: Final = ("symr", "hermc", "hermh", "spin")

_PEIRCE_DEGREES: Mapping[str, int] = {
    "symr": 1,
    "hermc": 2,
    "hermh": 4,
}

_GROUP_STYLES: Final = ("diagonal", "frobenius", "automorphism", "word")

_VERIFY_SUITES: Final = (
    "homogeneity",
    "chart",
    "funceq",
    "dimension",
    "equivariance",
)

_ENV_PREFIX: Final = "JORDAN_ZETA_"
_DEFAULT_CONFIG_FILE: Final = Path(__file__).resolve().parent.parent / "resources" / "config.yaml"


class ConfigError(ValueError):
    """Raised when a configuration source holds an unknown key or a bad value."""


@dataclass(frozen=True)
class JordanZetaConfig:
    """Immutable configuration for the Jordan-algebra zeta toolkit."""

    # Algebra construction
    FAMILIES: Tuple[str, ...] = field(default_factory=lambda: _FAMILIES)
    PEIRCE_DEGREES: Mapping[str, int] = field(default_factory=lambda: _PEIRCE_DEGREES)
    MAX_RANK: int = 4
    MIN_SPIN_DIM: int = 3
    ENABLE_HERMH: bool = True

    # Tolerances (relative, double precision)
    TOLERANCE: float = 1e-9
    ZERO_EIGENVALUE_THRESHOLD: float = 1e-10
    INTERPOLATION_TOLERANCE: float = 1e-8
    NEWTON_TOLERANCE: float = 1e-9
    CONDITION_LIMIT: float = 1e10

    # Polynomial spaces P_m
    MAX_MONOMIALS: int = 3000
    PM_SAMPLE_BUDGET: int = 200
    PM_STABILIZATION_SAMPLES: int = 10
    WORD_LENGTH: int = 4
    GROUP_STYLES: Tuple[str, ...] = field(default_factory=lambda: _GROUP_STYLES)

    # Integration
    DEFAULT_SAMPLES: int = 20000
    CHUNK_SIZE: int = 5000
    DEFAULT_THREADS: int = 4
    QUAD_LIMIT: int = 200
    DEFAULT_SEED: int = 20240601

    # Bernstein continuation: the iterated orbit sign is (-1)^(j*k)
    BERNSTEIN_SIGN_EXPONENT: str = "jk"

    # Laurent extraction
    CIRCLE_POINTS: int = 32
    MAX_RADIUS: float = 0.25
    NOISE_FLOOR_FACTOR: float = 3.0
    RELATIVE_NOISE_FLOOR: float = 1e-8
    LAURENT_POSITIVE_TERMS: int = 2
    # Budget doubling stops once every polar coefficient is resolved or at the cap
    LAURENT_MAX_SAMPLES: int = 2_560_000
    POLE_RESOLUTION: float = 0.05

    # Verification harnesses
    VERIFY_SUITES: Tuple[str, ...] = field(default_factory=lambda: _VERIFY_SUITES)
    SUPPORT_PROBE_WIDTH: float = 0.05
    SUPPORT_PROBE_RATIO: float = 10.0
    DIMENSION_RANK_TOL: float = 1e-6
    EQUIVARIANCE_TOLERANCE: float = 1e-6
    SPAN_TOLERANCE: float = 1e-2
    SIGMA_FACTOR: float = 3.0
    CHECK_RELATIVE_FLOOR: float = 1e-6
    HOMOGENEITY_SIGMA_BOUND: float = 1e-2
    HOMOGENEITY_MAX_SAMPLES: int = 640_000

    # Perturbations used by the negative controls of each suite
    CONTROL_EXPONENT_SHIFT: float = 0.1
    CONTROL_DILATION: float = 2.0
    CONTROL_PSI_SHIFT: float = -1.0
    CONTROL_CHART_SHIFT: float = 1.0

    # Logging configuration
    LOG_LEVEL: int = logging.INFO
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: Optional[str] = None

    # Output
    SCHEMA_VERSION: str = "jordan-zeta/1"
    OUTPUT_DIR: str = "reports"

    def peirce_degree(self, family: str) -> int:
        """Get the Peirce degree d of a matrix family."""
        return self.PEIRCE_DEGREES[family]

    def budget_defaults(self) -> dict:
        """Get integration budget defaults as a dictionary."""
        return {
            "samples": self.DEFAULT_SAMPLES,
            "chunk_size": self.CHUNK_SIZE,
            "threads": self.DEFAULT_THREADS,
            "seed": self.DEFAULT_SEED,
        }


def _coerce(name: str, raw: Any, current: Any) -> Any:
    """Convert a file or environment value to the type of the current field."""
    if name == "LOG_LEVEL" and isinstance(raw, str):
        level = logging.getLevelName(raw.upper())
        if not isinstance(level, int):
            raise ConfigError(f"Unknown log level '{raw}'")
        return level
    if name == "LOG_FILE" and (raw is None or raw == ""):
        return None
    if isinstance(current, bool):
        if isinstance(raw, str):
            lowered = raw.strip().lower()
            if lowered not in ("1", "0", "true", "false", "yes", "no"):
                raise ConfigError(f"Cannot read boolean for {name}: '{raw}'")
            return lowered in ("1", "true", "yes")
        return bool(raw)
    try:
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Cannot read {name} from '{raw}': {e}")
    if isinstance(current, tuple):
        return tuple(raw)
    if isinstance(current, str) or current is None:
        return None if raw is None else str(raw)
    return raw


def _flatten_sections(document: Mapping[str, Any]) -> Dict[str, Any]:
    """Map {"section": {"key": value}} to {"KEY": value}."""
    flat: Dict[str, Any] = {}
    for section, values in document.items():
        if not isinstance(values, Mapping):
            raise ConfigError(f"Section '{section}' must be a mapping")
        for key, value in values.items():
            flat[str(key).upper()] = value
    return flat


def load_config(
    path: Optional[Union[str, Path]] = None,
    env_file: Optional[Union[str, Path]] = None,
    base: Optional[JordanZetaConfig] = None,
) -> JordanZetaConfig:
    """
    Build a configuration from defaults, a YAML file and the environment.

    Args:
        path: YAML (or JSON) file with sectioned overrides; defaults to
            resources/config.yaml when it exists
        env_file: optional .env file read with python-dotenv
        base: configuration to start from (defaults to the global one)

    Returns:
        New frozen configuration

    Raises:
        ConfigError: If a key is unknown or a value cannot be converted
    """
    start = base if base is not None else config
    known = {f.name for f in fields(JordanZetaConfig)}
    overrides: Dict[str, Any] = {}

    source = Path(path) if path is not None else _DEFAULT_CONFIG_FILE
    if path is not None and not source.exists():
        raise ConfigError(f"Configuration file not found: {source}")
    if source.exists():
        with open(source, "r", encoding="utf-8") as handle:
            document = yaml.safe_load(handle) or {}
        for key, value in _flatten_sections(document).items():
            if key not in known:
                raise ConfigError(f"Unknown configuration key '{key}' in {source}")
            overrides[key] = _coerce(key, value, getattr(start, key))

    if env_file is not None:
        load_dotenv(env_file, override=False)
    for name in known:
        raw = os.environ.get(_ENV_PREFIX + name)
        if raw is not None:
            overrides[name] = _coerce(name, raw, getattr(start, name))

    return replace(start, **overrides)


# Global configuration instance
config: JordanZetaConfig = JordanZetaConfig()


def apply_config(new: JordanZetaConfig) -> None:
    """Copy `new` into the shared instance that every module imported."""
    for f in fields(JordanZetaConfig):
        object.__setattr__(config, f.name, getattr(new, f.name))

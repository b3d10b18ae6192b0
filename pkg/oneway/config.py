"""
Run configuration loader and validator for oneway.

A run is described by a flat RunConfig. Values come from dataclass defaults,
then an optional YAML or JSON document, then explicit command-line flags.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

logger = logging.getLogger(__name__)

PROTOCOLS = ("rotation", "cnot", "cphase", "fidelity", "enumerate")
ORDERINGS = ("a", "b", "c", "d")
ROTATION_ORDERINGS = ("a", "b")
ORACLES = ("id", "h")
MODES = ("enumerate", "sample", "force")
FORMATS = ("json", "csv")
STATE_SOURCES = ("cluster", "lab")

DEFAULT_DETECTORS = {
    "a1": "01",
    "a2": "00",
    "a3": "10",
    "a4": "11",
    "b1": "0",
    "b2": "1",
}

_ANGLE = re.compile(
    r"^(?P<sign>[+-]?)(?P<num>\d+(?:\.\d+)?)?\*?pi(?:/(?P<den>\d+(?:\.\d+)?))?$",
    re.IGNORECASE,
)
_TRUE = {"true", "on", "yes", "1"}
_FALSE = {"false", "off", "no", "0"}


class ConfigError(Exception):
    """Raised when there's an error in configuration."""

    def __init__(
        self, message: str, key: str | None = None, file_path: Path | None = None
    ):
        self.message = message
        self.key = key
        self.file_path = file_path

        location_parts = []
        if file_path:
            location_parts.append(f"file: {file_path}")
        if key:
            location_parts.append(f"key: {key}")

        if location_parts:
            full_message = f"{message} ({', '.join(location_parts)})"
        else:
            full_message = message

        super().__init__(full_message)


def parse_angle(value: str | float | int) -> float:
    """
    Parse an angle in radians.

    Accepts plain numbers and rational multiples of pi such as ``pi``,
    ``-pi/4``, ``3pi/4`` or ``3*pi/4``.

    Raises:
        ConfigError: If the text is not an angle
    """
    if isinstance(value, bool):
        raise ConfigError(f"Cannot parse angle {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = "".join(str(value).split())
    match = _ANGLE.match(text)
    if match:
        numerator = float(match.group("num") or 1)
        denominator = float(match.group("den") or 1)
        if denominator == 0:
            raise ConfigError(f"Angle '{value}' divides by zero")
        sign = -1.0 if match.group("sign") == "-" else 1.0
        return sign * numerator * math.pi / denominator
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"Cannot parse angle '{value}'") from None


def parse_bits(value: str | list[Any] | tuple[Any, ...], key: str) -> list[int]:
    """``"0,1,1"``, ``"011"`` or a list of 0/1 values."""
    if isinstance(value, str):
        items = [item for item in re.split(r"[,\s]+", value.strip()) if item]
        if len(items) == 1 and len(items[0]) > 1:
            items = list(items[0])
    else:
        items = list(value)
    try:
        bits = [int(item) for item in items]
    except (TypeError, ValueError):
        raise ConfigError(f"Bits must be 0 or 1, got {value!r}", key=key) from None
    if any(bit not in (0, 1) for bit in bits):
        raise ConfigError(f"Bits must be 0 or 1, got {value!r}", key=key)
    return bits


def parse_detector_map(text: str) -> dict[str, str]:
    """Parse ``"a1=01,a2=00,b1=0"`` into a mapping."""
    mapping = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, bits = item.partition("=")
        if not sep:
            raise ConfigError(f"Detector entry '{item}' needs 'name=bits'", key="detector_map")
        mapping[name.strip().lower()] = bits.strip()
    return mapping


@dataclass
class DetectorMap:
    """
    Detector names for measurement outcomes.

    Photon A's four detectors a1..a4 read the pair (s of pi_A, s of k_A);
    photon B's b1, b2 read the outcome of its measured qubit.
    """

    a: dict[tuple[int, int], str]
    b: dict[int, str]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str] | None = None) -> DetectorMap:
        """
        Merge ``mapping`` onto the defaults and check it is a bijection.

        Raises:
            ConfigError: If a name is unknown or two detectors share an outcome
        """
        entries = dict(DEFAULT_DETECTORS)
        for name, bits in (mapping or {}).items():
            if name not in DEFAULT_DETECTORS:
                raise ConfigError(f"Unknown detector '{name}'", key="detector_map")
            entries[name] = str(bits)
        a: dict[tuple[int, int], str] = {}
        b: dict[int, str] = {}
        for name, bits in entries.items():
            width = 2 if name.startswith("a") else 1
            if len(bits) != width or set(bits) - {"0", "1"}:
                raise ConfigError(
                    f"Detector {name} needs {width} bit(s), got '{bits}'", key="detector_map"
                )
            if width == 2:
                a[(int(bits[0]), int(bits[1]))] = name
            else:
                b[int(bits)] = name
        if len(a) != 4 or len(b) != 2:
            raise ConfigError("Detector mapping must be a bijection", key="detector_map")
        return cls(a=a, b=b)

    def a_detector(self, s_pi: int, s_k: int) -> str:
        return self.a[(s_pi, s_k)]

    def b_detector(self, bit: int) -> str:
        return self.b[bit]

    def to_dict(self) -> dict[str, str]:
        names = {name: f"{s_pi}{s_k}" for (s_pi, s_k), name in self.a.items()}
        names.update({name: str(bit) for bit, name in self.b.items()})
        return dict(sorted(names.items()))


@dataclass
class RunConfig:
    """Flat run configuration; keys match the command-line flags."""

    protocol: str = "rotation"
    alpha: float = 0.0
    beta: float = 0.0
    ordering: str = "a"
    oracle: str = "h"
    ff: bool = True
    adaptive: bool = True
    compensate_ht: bool = True
    noise_p: float = 1.0
    depol: list[float] | None = None
    mode: str = "enumerate"
    shots: int = 100_000
    seed: int = 0
    force_bits: list[int] | None = None
    format: str = "json"
    out: str | None = None
    detector_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_DETECTORS))
    grid: int = 8
    pattern_file: str | None = None
    state: str = "cluster"

    def to_dict(self) -> dict[str, Any]:
        """Configuration as written into report metadata (output path omitted)."""
        data = asdict(self)
        data.pop("out")
        return data

    def detectors(self) -> DetectorMap:
        return DetectorMap.from_mapping(self.detector_map)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _to_bool(value: Any, key: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"Expected a boolean, got {value!r}", key=key)


def _to_number(value: Any, key: str, kind: type) -> Any:
    if isinstance(value, bool):
        raise ConfigError(f"Expected a number, got {value!r}", key=key)
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Expected a number, got {value!r}", key=key) from None


def coerce_value(key: str, value: Any) -> Any:
    """
    Convert a raw document or flag value to the RunConfig field type.

    Raises:
        ConfigError: If the key is unknown or the value has the wrong shape
    """
    if key not in _FIELD_NAMES:
        raise ConfigError("Unknown configuration key", key=key)
    if value is None:
        return None
    if key in ("alpha", "beta"):
        try:
            return parse_angle(value)
        except ConfigError as e:
            raise ConfigError(e.message, key=key) from None
    if key in ("ff", "adaptive", "compensate_ht"):
        return _to_bool(value, key)
    if key == "noise_p":
        return _to_number(value, key, float)
    if key in ("shots", "seed", "grid"):
        return _to_number(value, key, int)
    if key == "depol":
        items = value.split(",") if isinstance(value, str) else list(value)
        return [_to_number(item, key, float) for item in items]
    if key == "force_bits":
        return parse_bits(value, key)
    if key == "detector_map":
        if isinstance(value, str):
            return parse_detector_map(value)
        if not isinstance(value, Mapping):
            raise ConfigError("detector_map must be a mapping or string", key=key)
        return {str(k).lower(): str(v) for k, v in value.items()}
    if key in ("oracle", "mode", "format", "ordering", "protocol"):
        return str(value).lower()
    return str(value)


class ConfigManager:
    """
    Configuration manager for oneway runs.

    Loads YAML or JSON documents, merges them onto defaults, applies flag
    overrides and validates the result.
    """

    def get_default_config(self) -> RunConfig:
        return RunConfig()

    def load(self, config_path: Path | None = None) -> RunConfig:
        """
        Load a configuration document.

        JSON documents go through the YAML loader since JSON is a YAML subset.

        Args:
            config_path: Path to the document, or None for defaults

        Returns:
            RunConfig with document values merged onto defaults

        Raises:
            ConfigError: If the document is unreadable, malformed or has unknown keys
        """
        if config_path is None:
            return self.get_default_config()
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError("Configuration file not found", file_path=config_path)

        try:
            with open(config_path, encoding="utf-8") as f:
                raw_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            line_info = ""
            if hasattr(e, "problem_mark") and e.problem_mark:
                line_info = f" at line {e.problem_mark.line + 1}"
            raise ConfigError(
                f"Invalid YAML syntax{line_info}: {e}", file_path=config_path
            ) from e
        except OSError as e:
            raise ConfigError(
                f"Error reading config file: {e}", file_path=config_path
            ) from e

        if not isinstance(raw_config, dict):
            raise ConfigError(
                "Configuration document must be a mapping", file_path=config_path
            )
        return self._merge_config(raw_config, config_path)

    def _merge_config(
        self, raw_config: dict[str, Any], config_path: Path | None = None
    ) -> RunConfig:
        values = {}
        for key, value in raw_config.items():
            try:
                values[key] = coerce_value(str(key), value)
            except ConfigError as e:
                raise ConfigError(e.message, key=str(key), file_path=config_path) from None
        return replace(self.get_default_config(), **values)

    def apply_overrides(
        self, config: RunConfig, overrides: Mapping[str, Any]
    ) -> RunConfig:
        """Apply explicit flag values; None means the flag was not given."""
        values = {
            key: coerce_value(key, value)
            for key, value in overrides.items()
            if value is not None
        }
        return replace(config, **values)

    def validate(self, config: RunConfig) -> list[str]:
        """
        Validate configuration and return list of errors.

        Args:
            config: RunConfig to validate.

        Returns:
            List of error messages. Empty list if valid.
        """
        errors = []

        if config.protocol not in PROTOCOLS:
            errors.append(f"protocol must be one of {', '.join(PROTOCOLS)}")
        if config.ordering not in ORDERINGS:
            errors.append(f"ordering must be one of {', '.join(ORDERINGS)}")
        elif config.protocol == "rotation" and config.ordering not in ROTATION_ORDERINGS:
            errors.append("ordering for rotation must be a or b")
        if config.oracle not in ORACLES:
            errors.append(f"oracle must be one of {', '.join(ORACLES)}")

        for name in ("alpha", "beta", "noise_p"):
            if not math.isfinite(getattr(config, name)):
                errors.append(f"{name} must be finite")
        if not 0.0 <= config.noise_p <= 1.0:
            errors.append("noise_p must be in [0, 1]")
        if config.depol is not None:
            if len(config.depol) != 4:
                errors.append("depol needs one strength per qubit (4 values)")
            if any(not 0.0 <= lam <= 1.0 for lam in config.depol):
                errors.append("depol strengths must be in [0, 1]")

        if config.mode not in MODES:
            errors.append(f"mode must be one of {', '.join(MODES)}")
        if config.shots < 1:
            errors.append("shots must be at least 1")
        if not 0 <= config.seed < 2**64:
            errors.append("seed must be in [0, 2^64)")
        if config.mode == "force" and not config.force_bits:
            errors.append("force_bits is required in force mode")
        noisy = config.noise_p < 1.0 or any(config.depol or ())
        if config.mode == "sample" and noisy:
            errors.append("mode sample runs on pure states only; use enumerate with noise")

        if config.format not in FORMATS:
            errors.append(f"format must be one of {', '.join(FORMATS)}")
        if config.grid < 1:
            errors.append("grid must be at least 1")

        if config.protocol == "enumerate":
            if not config.pattern_file:
                errors.append("pattern_file is required for enumerate")
            if config.state not in STATE_SOURCES and not Path(config.state).suffix:
                errors.append("state must be cluster, lab or a graph JSON path")

        try:
            config.detectors()
        except ConfigError as e:
            errors.append(f"detector_map: {e}")

        for error in errors:
            logger.warning(f"Configuration: {error}")
        return errors

    def load_and_validate(
        self,
        config_path: Path | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> RunConfig:
        """
        Load, apply overrides and validate.

        Raises:
            ConfigError: If configuration is invalid.
        """
        config = self.load(config_path)
        config = self.apply_overrides(config, overrides or {})
        errors = self.validate(config)

        if errors:
            raise ConfigError(
                f"Configuration validation failed: {'; '.join(errors)}",
                file_path=config_path,
            )

        return config

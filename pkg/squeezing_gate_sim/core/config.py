"""
Experiment configuration files

Two syntaxes describe the same sections and keys. The text form (any suffix
other than .yml/.yaml)::

    [gate]
    T = 0.5                        # trailing comments start with # or ;
    ancilla_squeezing = 3.6 dB

and the YAML form, a mapping of sections to mappings of keys. Values are
``<number>[ <suffix>]`` with the suffixes each key accepts listed in KEYS.
Every parse or validation failure is a ConfigError carrying the line and
column of the offending token.
"""
import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from .. import __version__
from .errors import ConfigError, GateSimulationError
from .gate import AUTO, GateConfig, SpectralModel
from .gaussian import antisqueezing_db_to_ratio, squeezing_db_to_ratio, to_db
from .opa import OpaGainLoss, lumped_loss, spec_from_gain_loss

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "experiment.ini"

REQUIRED = object()

_NUMBER = re.compile(
    r"^(?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?P<suffix>%|dB|deg|rad)?$"
)
_SECTION = re.compile(r"^\[\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TRAILING_COMMENT = re.compile(r"\s+[#;].*$")

_BOOLEANS = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}

# suffixes each value kind accepts; None is a bare number
_SUFFIXES = {
    "number": {None},
    "fraction": {None, "%"},
    "gain": {None, "dB"},
    "squeezing": {None, "dB"},
    "antisqueezing": {None, "dB"},
    "angle": {None, "rad", "deg"},
    "attenuation": {None, "%", "dB"},
}


@dataclass(frozen=True)
class KeySpec:
    kind: str
    default: Any = None
    check: Optional[Tuple[Callable[[float], bool], str]] = None


def _between(low: float, high: float, closed_low: bool = True, closed_high: bool = False):
    def check(value: float) -> bool:
        above = value >= low if closed_low else value > low
        below = value <= high if closed_high else value < high
        return above and below

    bounds = f"{'[' if closed_low else '('}{low:g}, {high:g}{']' if closed_high else ')'}"
    return check, f"must lie in {bounds}"


_POSITIVE = (lambda value: value > 0, "must be positive")
_NON_NEGATIVE = (lambda value: value >= 0, "must be non-negative")

KEYS: Dict[str, Dict[str, KeySpec]] = {
    "gate": {
        "T": KeySpec("number", REQUIRED, _between(0, 1, closed_low=False, closed_high=True)),
        "ancilla_r": KeySpec("number", None, _NON_NEGATIVE),
        "ancilla_squeezing": KeySpec("squeezing", None, _POSITIVE),
        "ancilla_antisqueezing": KeySpec("antisqueezing", None, _POSITIVE),
        "l1": KeySpec("fraction", 0.0, _between(0, 1)),
        "lower_arm_loss": KeySpec("fraction", 0.0, _between(0, 1)),
        "tap_loss": KeySpec("fraction", 0.0, _between(0, 1)),
        "displacement_R": KeySpec("fraction", 0.01, _between(0, 1, closed_low=False)),
        "ff_attenuation": KeySpec("attenuation", AUTO, _between(0, 1, closed_high=True)),
        "phase_error": KeySpec("angle", 0.0),
        "feedforward": KeySpec("bool", True),
    },
    "opa2": {
        "gain": KeySpec("gain", REQUIRED, _NON_NEGATIVE),
        "loss": KeySpec("fraction", None, _between(0, 1)),
        "coupling_loss": KeySpec("fraction", None, _between(0, 1)),
        "propagation_loss": KeySpec("fraction", None, _between(0, 1)),
        "length": KeySpec("number", 1.0, _POSITIVE),
    },
    "opa3": {
        "gain": KeySpec("gain", None, _NON_NEGATIVE),
        "loss": KeySpec("fraction", REQUIRED, _between(0, 1)),
    },
    "spectral": {
        "delta_tau_fs": KeySpec("number", 0.0),
        "gdd_fs2": KeySpec("number", 0.0),
        "mask_inner_thz": KeySpec("number", 0.1, _NON_NEGATIVE),
        "mask_outer_thz": KeySpec("number", 1.3, _POSITIVE),
    },
}


@dataclass(frozen=True)
class Entry:
    raw: str
    line: Optional[int]
    column: Optional[int]


@dataclass
class ConfigDocument:
    """Raw key/value text per section, with source positions"""

    path: Optional[str] = None
    sections: Dict[str, Dict[str, Entry]] = field(default_factory=dict)

    def add(self, section: str, key: str, entry: Entry, key_column: Optional[int] = None) -> None:
        if key not in KEYS[section]:
            raise ConfigError(f"unknown key `{section}.{key}`", self.path, entry.line, key_column, key)
        values = self.sections.setdefault(section, {})
        if key in values:
            raise ConfigError(
                f"duplicate key `{section}.{key}` (first set on line {values[key].line})",
                self.path, entry.line, key_column, f"{section}.{key}",
            )
        values[key] = entry

    def get(self, section: str, key: str) -> Optional[Entry]:
        return self.sections.get(section, {}).get(key)


@dataclass(frozen=True)
class SimulationConfig:
    gate: GateConfig
    spectral: SpectralModel
    values: Dict[str, Any]
    path: Optional[str] = None

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        nested: Dict[str, Dict[str, Any]] = {}
        for name, value in self.values.items():
            section, key = name.split(".", 1)
            nested.setdefault(section, {})[key] = value
        return nested


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: Dict[str, Dict[str, Any]]
    version: str
    digest: str

    @classmethod
    def for_run(cls, command: str, config: SimulationConfig) -> "RunManifest":
        return cls(command=command, config=config.to_dict(), version=__version__, digest=config_digest(config))

    def to_dict(self) -> Dict[str, Any]:
        return {"command": self.command, "config": self.config, "version": self.version, "digest": self.digest}

    def write(self, output_path: Union[str, Path]) -> None:
        with open(output_path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)


# --- syntax -------------------------------------------------------------------

def parse_text(text: str, path: Optional[str] = None) -> ConfigDocument:
    document = ConfigDocument(path=path)
    section = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        stripped = _TRAILING_COMMENT.sub("", stripped)
        indent = len(line) - len(line.lstrip())

        if stripped.startswith("["):
            match = _SECTION.match(stripped)
            if not match:
                raise ConfigError("malformed section header", path, lineno, indent + 1)
            section = match.group("name")
            if section not in KEYS:
                raise ConfigError(f"unknown section [{section}]", path, lineno, indent + 2, section)
            continue

        if "=" not in stripped:
            raise ConfigError("expected `key = value`", path, lineno, indent + 1)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", path, lineno, indent + 1)
        if section is None:
            raise ConfigError(f"key `{key}` outside of a section", path, lineno, indent + 1, key)
        if not value:
            raise ConfigError(f"missing value for `{section}.{key}`", path, lineno, indent + 1, key)

        after_equals = line.index("=") + 1
        value_column = after_equals + len(line[after_equals:]) - len(line[after_equals:].lstrip()) + 1
        document.add(section, key, Entry(value, lineno, value_column), indent + 1)

    return document


def parse_yaml(text: str, path: Optional[str] = None) -> ConfigDocument:
    document = ConfigDocument(path=path)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(
            f"invalid YAML: {problem}", path,
            mark.line + 1 if mark else None, mark.column + 1 if mark else None,
        )

    if root is None:
        return document
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError("top level must be a mapping of sections", path, root.start_mark.line + 1)

    for section_node, body in root.value:
        section = section_node.value
        position = (section_node.start_mark.line + 1, section_node.start_mark.column + 1)
        if section not in KEYS:
            raise ConfigError(f"unknown section [{section}]", path, *position, section)
        if not isinstance(body, yaml.MappingNode):
            raise ConfigError(f"section [{section}] must be a mapping", path, *position, section)
        for key_node, value_node in body.value:
            if not isinstance(value_node, yaml.ScalarNode):
                raise ConfigError(
                    f"`{section}.{key_node.value}` must be a scalar", path,
                    value_node.start_mark.line + 1, value_node.start_mark.column + 1, key_node.value,
                )
            entry = Entry(str(value_node.value), value_node.start_mark.line + 1, value_node.start_mark.column + 1)
            document.add(section, str(key_node.value), entry, key_node.start_mark.column + 1)

    return document


# --- values -------------------------------------------------------------------

def _convert(spec: KeySpec, name: str, entry: Entry, path: Optional[str]) -> Any:
    raw = entry.raw.strip()

    def fail(message: str) -> ConfigError:
        return ConfigError(f"`{name}` {message}", path, entry.line, entry.column, name)

    if spec.kind == "bool":
        if raw.lower() not in _BOOLEANS:
            raise fail(f"expects a boolean, got {raw!r}")
        return _BOOLEANS[raw.lower()]
    if spec.kind == "attenuation" and raw.lower() == AUTO:
        return AUTO

    match = _NUMBER.match(raw)
    if not match:
        raise fail(f"expects a number, got {raw!r}")
    number = float(match.group("number"))
    suffix = match.group("suffix")
    if suffix not in _SUFFIXES[spec.kind]:
        allowed = ", ".join(s for s in sorted(_SUFFIXES[spec.kind], key=str) if s) or "none"
        raise fail(f"does not accept suffix {suffix or 'none'!r} (allowed: {allowed})")

    if spec.kind in ("fraction", "attenuation") and suffix == "%":
        value = number / 100
    elif spec.kind == "attenuation" and suffix == "dB":
        value = 10 ** (number / 10)
    elif spec.kind == "gain":
        # stored in dB
        if suffix == "dB":
            value = number
        elif number < 1:
            raise fail(f"linear gain must be >= 1, got {number:g}")
        else:
            value = to_db(number)
    elif spec.kind == "squeezing":
        value = squeezing_db_to_ratio(number) if suffix == "dB" else number
    elif spec.kind == "antisqueezing":
        value = antisqueezing_db_to_ratio(number) if suffix == "dB" else number
    elif spec.kind == "angle":
        value = np.deg2rad(number) if suffix == "deg" else number
    else:
        value = number

    value = float(value)
    if spec.check is not None:
        predicate, message = spec.check
        if not predicate(value):
            raise fail(f"{message}, got {value:g}")
    return value


def resolve(document: ConfigDocument) -> Dict[str, Any]:
    """Typed values for every key, defaults materialised, absent optionals omitted"""
    values: Dict[str, Any] = {}
    for section, keys in KEYS.items():
        for key, spec in keys.items():
            name = f"{section}.{key}"
            entry = document.get(section, key)
            if entry is not None:
                values[name] = _convert(spec, name, entry, document.path)
            elif spec.default is REQUIRED:
                raise ConfigError(f"missing required key `{name}`", document.path, key=name)
            elif spec.default is not None:
                values[name] = spec.default
    return values


def _require_together(document: ConfigDocument, names: List[str]) -> bool:
    present = [name for name in names if document.get(*name.split(".")) is not None]
    if present and len(present) != len(names):
        missing = [name for name in names if name not in present]
        raise ConfigError(f"missing required key `{missing[0]}` (needed with `{present[0]}`)",
                          document.path, key=missing[0])
    return bool(present)


def _conflict(document: ConfigDocument, name: str, other: str) -> ConfigError:
    entry = document.get(*name.split("."))
    return ConfigError(f"`{name}` cannot be combined with `{other}`", document.path,
                       entry.line, entry.column, name)


def build(document: ConfigDocument) -> SimulationConfig:
    values = resolve(document)
    path = document.path

    has_pair = _require_together(document, ["gate.ancilla_squeezing", "gate.ancilla_antisqueezing"])
    has_r = "gate.ancilla_r" in values
    if has_r and has_pair:
        raise _conflict(document, "gate.ancilla_r", "gate.ancilla_squeezing")
    if not (has_r or has_pair):
        raise ConfigError(
            "missing required key `gate.ancilla_r` (or `gate.ancilla_squeezing` "
            "with `gate.ancilla_antisqueezing`)", path, key="gate.ancilla_r",
        )

    split_opa2 = _require_together(document, ["opa2.coupling_loss", "opa2.propagation_loss"])
    if split_opa2 and "opa2.loss" in values:
        raise _conflict(document, "opa2.loss", "opa2.coupling_loss")
    if not (split_opa2 or "opa2.loss" in values):
        raise ConfigError("missing required key `opa2.loss` (or `opa2.coupling_loss` "
                          "with `opa2.propagation_loss`)", path, key="opa2.loss")
    if not split_opa2:
        if document.get("opa2", "length") is not None:
            raise _conflict(document, "opa2.length", "opa2.loss")
        del values["opa2.length"]

    try:
        if split_opa2:
            gain_loss = OpaGainLoss(values["opa2.gain"], values["opa2.propagation_loss"])
            opa2 = dict(
                opa2_spec=spec_from_gain_loss(gain_loss, values["opa2.length"]),
                opa2_coupling_loss=values["opa2.coupling_loss"],
                l2=lumped_loss(values["opa2.coupling_loss"], values["opa2.propagation_loss"]),
            )
        else:
            opa2 = dict(l2=values["opa2.loss"])

        gate = GateConfig(
            T=values["gate.T"],
            ancilla_r=values.get("gate.ancilla_r"),
            ancilla_s_minus=values.get("gate.ancilla_squeezing"),
            ancilla_s_plus=values.get("gate.ancilla_antisqueezing"),
            l1=values["gate.l1"],
            l3=values["opa3.loss"],
            lower_arm_loss=values["gate.lower_arm_loss"],
            tap_loss=values["gate.tap_loss"],
            opa2_gain_db=values["opa2.gain"],
            opa3_gain_db=values.get("opa3.gain"),
            displacement_R=values["gate.displacement_R"],
            ff_attenuation=values["gate.ff_attenuation"],
            phase_error=values["gate.phase_error"],
            feedforward_enabled=values["gate.feedforward"],
            **opa2,
        )
        spectral = SpectralModel(
            delta_tau=values["spectral.delta_tau_fs"] * 1e-15,
            gdd=values["spectral.gdd_fs2"] * 1e-30,
            mask_inner=values["spectral.mask_inner_thz"] * 1e12,
            mask_outer=values["spectral.mask_outer_thz"] * 1e12,
        )
    except ConfigError:
        raise
    except GateSimulationError as exc:
        raise ConfigError(str(exc), path) from exc

    return SimulationConfig(gate=gate, spectral=spectral, values=values, path=path)


def parse_config(text: str, path: Optional[str] = None, syntax: str = "text") -> SimulationConfig:
    if syntax not in ("text", "yaml"):
        raise ConfigError(f"unknown config syntax {syntax!r}", path)
    document = parse_yaml(text, path) if syntax == "yaml" else parse_text(text, path)
    return build(document)


def load_config(path: Optional[Union[str, Path]] = None) -> SimulationConfig:
    path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", str(path))

    syntax = "yaml" if path.suffix.lower() in (".yml", ".yaml") else "text"
    config = parse_config(text, str(path), syntax)
    logger.info("loaded %s config from %s", syntax, path)
    return config


# --- canonical form -----------------------------------------------------------

def _format_value(name: str, value: Any) -> str:
    section, key = name.split(".", 1)
    kind = KEYS[section][key].kind
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    text = f"{value:.17g}"
    if kind == "gain":
        return f"{text} dB"
    if kind == "angle":
        return f"{text} rad"
    return text


def canonical_text(config: SimulationConfig) -> str:
    """Sorted `section.key=value` lines of every resolved value"""
    lines = sorted(f"{name}={_format_value(name, value)}" for name, value in config.values.items())
    return "\n".join(lines) + "\n"


def config_digest(config: SimulationConfig) -> str:
    return hashlib.sha256(canonical_text(config).encode("utf-8")).hexdigest()

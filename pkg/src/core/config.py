"""
Experiment configuration.

Config files are `key=value` lines, optionally grouped under `[section]`
headers (model, estimator, calibration, sampler, run). `#` starts a comment.
Outside a section the short aliases below are accepted, as are dotted keys
such as `sampler.scheme=auto`. Several pairs may share a line when separated
by whitespace:

    model=exp_diff mu=1 lambda=0.5
    estimator=siegmund
    b=10
    n=100000
    seed=1

Every problem is reported as ConfigError with the 1-based line number.
"""

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.core.conditional_sampler import SamplerScheme, SamplerSettings
from src.core.errors import ConfigError
from src.increments.base import IncrementModel
from src.increments.registry import MODEL_PARAMETERS, MODEL_TABLE, build_model


class EstimatorKind(str, Enum):
    BG = "bg"
    SIEGMUND = "siegmund"
    CRUDE = "crude"


# ============================================================
# Settings
# ============================================================

@dataclass
class ModelSpec:
    name: str = "weibull_det"
    params: Dict[str, Any] = field(default_factory=dict)

    def build(self) -> IncrementModel:
        return build_model(self.name, self.params)


@dataclass
class CalibrationSettings:
    gamma: float = 0.5
    a_star: Optional[float] = None      # manual override; skips the grid scan
    y_min: Optional[float] = None       # default -max(200, 2 b_max)
    grid_step: float = 0.1
    w_resolution: float = 0.01          # spline spacing in log(1 + |y|)


@dataclass
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    estimator: EstimatorKind = EstimatorKind.BG
    levels: List[float] = field(default_factory=list)
    n: int = 1000
    seed: int = 0
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    max_steps: Optional[int] = None     # crude only; default ceil(20 b / |EX|)
    step_cap: int = 100_000_000
    workers: Optional[int] = None
    output: Optional[Path] = None

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied (CLI flags win over the file)."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def with_calibration(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None calibration overrides applied."""
        calibration = replace(self.calibration, **{k: v for k, v in overrides.items() if v is not None})
        return replace(self, calibration=calibration)


# ============================================================
# Parsing
# ============================================================

def _float_list(text: str) -> List[float]:
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return [float(t) for t in items]


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _optional_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none", "auto") else float(text)


def _optional_int(text: str) -> Optional[int]:
    return None if text.lower() in ("", "none", "auto") else _int(text)


def _model_param(text: str) -> Any:
    return _float_list(text) if "," in text else float(text)


# canonical key -> converter
SCHEMA: Dict[str, Callable[[str], Any]] = {
    "model.name": str,
    "estimator.kind": EstimatorKind,
    "estimator.max_steps": _optional_int,
    "estimator.step_cap": _int,
    "calibration.gamma": float,
    "calibration.a_star": _optional_float,
    "calibration.y_min": _optional_float,
    "calibration.grid_step": float,
    "calibration.w_resolution": float,
    "sampler.scheme": SamplerScheme,
    "sampler.theta": float,
    "sampler.proposal_cap": _int,
    "sampler.naive_beta_ceiling": float,
    "sampler.acceptance_floor": float,
    "sampler.m_safety_factor": float,
    "sampler.beta_quantum": float,
    "sampler.fallback_beta": float,
    "sampler.m": _optional_float,
    "run.levels": _float_list,
    "run.n": _int,
    "run.seed": _int,
    "run.workers": _optional_int,
    "run.output": Path,
}
SCHEMA.update({f"model.{p}": _model_param for p in MODEL_PARAMETERS})

ALIASES = {
    "model": "model.name",
    "estimator": "estimator.kind",
    "max_steps": "estimator.max_steps",
    "step_cap": "estimator.step_cap",
    "gamma": "calibration.gamma",
    "a_star": "calibration.a_star",
    "y_min": "calibration.y_min",
    "grid_step": "calibration.grid_step",
    "scheme": "sampler.scheme",
    "theta": "sampler.theta",
    "proposal_cap": "sampler.proposal_cap",
    "b": "run.levels",
    "levels": "run.levels",
    "n": "run.n",
    "seed": "run.seed",
    "workers": "run.workers",
    "out": "run.output",
    "output": "run.output",
    **{p: f"model.{p}" for p in MODEL_PARAMETERS},
}

SECTION_ALIASES = {
    ("model", "model"): "model.name",
    ("estimator", "estimator"): "estimator.kind",
    ("run", "b"): "run.levels",
}

REQUIRED = ("model.name", "run.levels")


def _split_pairs(line: str) -> List[Tuple[str, str]]:
    if line.count("=") == 1:
        key, value = line.split("=")
        return [(key.strip(), value.strip())]
    pairs = []
    for token in line.split():
        if "=" not in token:
            raise ValueError(f"expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def _canonical(section: Optional[str], key: str) -> str:
    if "." in key:
        return key
    if section is None:
        return ALIASES.get(key, key)
    return SECTION_ALIASES.get((section, key), f"{section}.{key}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text into a fully resolved ExperimentConfig."""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    section: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("model", "estimator", "calibration", "sampler", "run"):
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue

        try:
            pairs = _split_pairs(line)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno) from None

        for key, value in pairs:
            canon = _canonical(section, key)
            if canon not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if canon in values:
                raise ConfigError(f"duplicate key {key!r} (first set on line {lines[canon]})", lineno)
            try:
                values[canon] = SCHEMA[canon](value)
            except ValueError as exc:
                raise ConfigError(f"bad value {value!r} for {key!r}: {exc}", lineno) from None
            lines[canon] = lineno

    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    return _resolve(values, lines)


def _resolve(values: Dict[str, Any], lines: Dict[str, int]) -> ExperimentConfig:
    def line_of(*keys: str) -> Optional[int]:
        found = [lines[k] for k in keys if k in lines]
        return found[0] if found else None

    name = values["model.name"]
    if name not in MODEL_TABLE:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_TABLE)}", lines["model.name"])
    params = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("model.") and k != "model.name"}
    spec = ModelSpec(name=name, params=params)
    try:
        model = spec.build()
    except (KeyError, ValueError, TypeError) as exc:
        param_keys = [f"model.{p}" for p in params]
        raise ConfigError(f"model {name!r}: {exc}", line_of(*param_keys, "model.name")) from None

    cal_kwargs = {f.name: values[f"calibration.{f.name}"] for f in fields(CalibrationSettings) if f"calibration.{f.name}" in values}
    calibration = CalibrationSettings(**cal_kwargs)

    sampler_kwargs = {f.name: values[f"sampler.{f.name}"] for f in fields(SamplerSettings) if f"sampler.{f.name}" in values}
    try:
        sampler = SamplerSettings(**sampler_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), line_of(*(f"sampler.{k}" for k in sampler_kwargs))) from None

    config = ExperimentConfig(
        model=spec,
        estimator=values.get("estimator.kind", EstimatorKind.BG),
        levels=values["run.levels"],
        n=values.get("run.n", 1000),
        seed=values.get("run.seed", 0),
        calibration=calibration,
        sampler=sampler,
        max_steps=values.get("estimator.max_steps"),
        step_cap=values.get("estimator.step_cap", 100_000_000),
        workers=values.get("run.workers"),
        output=values.get("run.output"),
    )
    _check(config, model, line_of)
    return config


def _check(config: ExperimentConfig, model: IncrementModel, line_of) -> None:
    if config.n < 1:
        raise ConfigError(f"n must be >= 1, got {config.n}", line_of("run.n"))
    if any(b <= 0 for b in config.levels):
        raise ConfigError(f"levels must be positive, got {config.levels}", line_of("run.levels"))
    if config.seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {config.seed}", line_of("run.seed"))
    if config.workers is not None and config.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {config.workers}", line_of("run.workers"))
    if config.max_steps is not None and config.max_steps < 1:
        raise ConfigError(f"max_steps must be >= 1, got {config.max_steps}", line_of("estimator.max_steps"))
    if config.step_cap < 1:
        raise ConfigError(f"step_cap must be >= 1, got {config.step_cap}", line_of("estimator.step_cap"))

    cal = config.calibration
    if config.estimator is EstimatorKind.BG:
        if not 0.0 < cal.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {cal.gamma}", line_of("calibration.gamma"))
        if cal.grid_step <= 0.0:
            raise ConfigError(f"grid_step must be positive, got {cal.grid_step}", line_of("calibration.grid_step"))
        if cal.y_min is not None and cal.y_min >= 0.0:
            raise ConfigError(f"y_min must be negative, got {cal.y_min}", line_of("calibration.y_min"))
        if cal.w_resolution <= 0.0:
            raise ConfigError(
                f"w_resolution must be positive, got {cal.w_resolution}", line_of("calibration.w_resolution")
            )

    if config.estimator is EstimatorKind.SIEGMUND and model.tail_class.heavy:
        raise ConfigError(
            f"estimator siegmund needs a light-tailed model, but {config.model.name!r} is "
            f"{model.tail_class.value} (E exp(theta X) is infinite for every theta > 0); "
            "use estimator=bg",
            line_of("estimator.kind"),
        )


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)

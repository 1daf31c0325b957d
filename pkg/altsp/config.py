"""
Run configuration: YAML documents, presets and defaults.

Precedence is built-in defaults < preset < config file < command-line flags.
Every section is checked against a fixed set of keys and unknown keys are
rejected with their dotted path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from .acceptance import RiskSpec
from .case_study import CaseStudyConfig
from .errors import AltspError, ConfigError
from .fisher import DesignPoint
from .links import KnotSet, LinkModel
from .objectives import CostSpec
from .optimizer import FixedQuantities, Objective, OptimizerSettings

logger = logging.getLogger(__name__)

PRESETS: Dict[str, RiskSpec] = {
    "case1": RiskSpec(alpha=0.05, beta=0.10, p_alpha=0.021, p_beta=0.074),
    "case2": RiskSpec(alpha=0.05, beta=0.10, p_alpha=0.032, p_beta=0.094),
    "case3": RiskSpec(alpha=0.05, beta=0.10, p_alpha=0.019, p_beta=0.054),
    "case4": RiskSpec(alpha=0.10, beta=0.10, p_alpha=0.021, p_beta=0.074),
    "case5": RiskSpec(alpha=0.10, beta=0.10, p_alpha=0.032, p_beta=0.094),
    "case6": RiskSpec(alpha=0.10, beta=0.10, p_alpha=0.019, p_beta=0.054),
}

REFERENCE_KNOTS = (0.0, 0.2, 1.0)
REFERENCE_MU_GAMMA = (1.0, 0.4, -1.5)
REFERENCE_SIGMA_GAMMA = (math.log(0.6), math.log(0.5), math.log(0.4))


def reference_model() -> LinkModel:
    """Link model used when a configuration does not supply one."""
    return LinkModel(
        KnotSet(REFERENCE_KNOTS),
        REFERENCE_MU_GAMMA,
        KnotSet(REFERENCE_KNOTS),
        REFERENCE_SIGMA_GAMMA,
    )


@dataclass(frozen=True)
class CostSettings:
    p_nc: Optional[float] = None
    l_s: Optional[float] = None
    c_a: float = 0.15
    c_r: float = 0.80
    c_t: float = 0.08
    c_star: float = 0.05
    w1: float = 0.50
    w2: float = 0.75

    def __post_init__(self):
        if self.p_nc is not None and self.l_s is not None:
            raise ConfigError("cost: give either p_nc or l_s, not both")


@dataclass(frozen=True)
class LinkSettings:
    kind: str = "both"
    mu_knots: Optional[Tuple[float, ...]] = None
    sigma_knots: Optional[Tuple[float, ...]] = None
    mu_segments: int = 3
    sigma_segments: int = 2

    def __post_init__(self):
        if self.kind not in ("both", "pla", "linear"):
            raise ConfigError(
                f"link.kind must be one of both, pla, linear; got {self.kind!r}"
            )
        for name in ("mu_knots", "sigma_knots"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in value))
                KnotSet(getattr(self, name))
        if self.mu_segments < 1 or self.sigma_segments < 1:
            raise ConfigError("link segments must be at least 1")


@dataclass(frozen=True)
class BenchmarkSettings:
    grid_points: int = 1001


@dataclass(frozen=True)
class OcSettings:
    points: int = 99

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("oc.points must be at least 1")


@dataclass(frozen=True)
class DataSettings:
    path: Optional[str] = None
    censor_time: Optional[float] = None


@dataclass
class RunConfig:
    objective: Objective = Objective.COST
    preset: Optional[str] = None
    seed: int = 0
    output_dir: Optional[str] = None
    risks: Optional[RiskSpec] = None
    cost: CostSettings = field(default_factory=CostSettings)
    fixed: FixedQuantities = field(default_factory=FixedQuantities)
    model: LinkModel = field(default_factory=reference_model)
    link: LinkSettings = field(default_factory=LinkSettings)
    plan: Optional[DesignPoint] = None
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    case_study: CaseStudyConfig = field(default_factory=CaseStudyConfig)
    benchmark: BenchmarkSettings = field(default_factory=BenchmarkSettings)
    oc: OcSettings = field(default_factory=OcSettings)
    data: DataSettings = field(default_factory=DataSettings)

    # ----------------------------------------------------------------- #
    # Resolved views
    # ----------------------------------------------------------------- #

    def require_risks(self) -> RiskSpec:
        if self.risks is None:
            raise ConfigError(
                "risks are required: give a risks section "
                "(alpha, beta, p_alpha, p_beta) or one of the presets "
                f"{', '.join(sorted(PRESETS))}"
            )
        return self.risks

    def cost_spec(self) -> CostSpec:
        """Cost parameters with ``p_nc`` resolved from ``l_s`` or ``p_beta``."""
        costs = {
            name: getattr(self.cost, name)
            for name in ("c_a", "c_r", "c_t", "c_star", "w1", "w2")
        }
        if self.cost.l_s is not None:
            return CostSpec.from_specification_limit(
                self.cost.l_s, self.model, lot_size=self.fixed.lot_size, **costs
            )
        p_nc = self.cost.p_nc
        if p_nc is None:
            p_nc = self.require_risks().p_beta
        return CostSpec(p_nc=p_nc, lot_size=self.fixed.lot_size, **costs)

    def optimizer_settings(self) -> OptimizerSettings:
        return dataclasses.replace(self.optimizer, seed=self.seed)


# ---------------------------------------------------------------------- #
# Schema
# ---------------------------------------------------------------------- #
TOP_LEVEL_KEYS = (
    "objective",
    "preset",
    "seed",
    "output_dir",
    "risks",
    "cost",
    "fixed",
    "model",
    "link",
    "plan",
    "optimizer",
    "case_study",
    "benchmark",
    "oc",
    "data",
)

RISK_KEYS = ("alpha", "beta", "p_alpha", "p_beta")
MODEL_KEYS = ("mu_knots", "mu_gamma", "sigma_knots", "sigma_gamma")
PLAN_KEYS = ("stresses", "proportions", "n", "tau0")

SECTION_TYPES = {
    "cost": CostSettings,
    "fixed": FixedQuantities,
    "link": LinkSettings,
    "optimizer": OptimizerSettings,
    "case_study": CaseStudyConfig,
    "benchmark": BenchmarkSettings,
    "oc": OcSettings,
    "data": DataSettings,
}


def _check_keys(section: Mapping, allowed, path: str) -> None:
    if not isinstance(section, Mapping):
        raise ConfigError(f"{path} must be a mapping, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown configuration key: {where}")


def _section_fields(cls) -> Tuple[str, ...]:
    names = tuple(f.name for f in dataclasses.fields(cls))
    if cls is OptimizerSettings:
        # the run-level seed drives the optimizer
        return tuple(n for n in names if n != "seed")
    return names


def _build(cls, values: Mapping, path: str):
    _check_keys(values, _section_fields(cls), path)
    try:
        return cls(**values)
    except ConfigError:
        raise
    except (AltspError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _build_risks(doc: Mapping) -> Optional[RiskSpec]:
    preset = doc.get("preset")
    base: Dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; choose one of {', '.join(sorted(PRESETS))}"
            )
        base = dataclasses.asdict(PRESETS[preset])
    section = doc.get("risks")
    if section is None:
        return PRESETS[preset] if preset is not None else None
    _check_keys(section, RISK_KEYS, "risks")
    base.update(section)
    missing = [key for key in RISK_KEYS if key not in base]
    if missing:
        raise ConfigError(
            f"risks is missing {', '.join(missing)}; complete it or use one of the "
            f"presets {', '.join(sorted(PRESETS))}"
        )
    try:
        return RiskSpec(**{key: float(base[key]) for key in RISK_KEYS})
    except (AltspError, TypeError, ValueError) as e:
        raise ConfigError(f"risks: {e}") from e


def _build_model(section: Optional[Mapping]) -> LinkModel:
    if section is None:
        return reference_model()
    _check_keys(section, MODEL_KEYS, "model")
    missing = [key for key in MODEL_KEYS if key not in section]
    if missing:
        raise ConfigError(f"model is missing {', '.join(missing)}")
    try:
        return LinkModel(
            KnotSet(tuple(section["mu_knots"])),
            section["mu_gamma"],
            KnotSet(tuple(section["sigma_knots"])),
            section["sigma_gamma"],
        )
    except (AltspError, TypeError, ValueError) as e:
        raise ConfigError(f"model: {e}") from e


def _build_plan(section: Optional[Mapping]) -> Optional[DesignPoint]:
    if section is None:
        return None
    _check_keys(section, PLAN_KEYS, "plan")
    missing = [key for key in PLAN_KEYS if key not in section]
    if missing:
        raise ConfigError(f"plan is missing {', '.join(missing)}")
    try:
        plan = DesignPoint(
            tuple(section["stresses"]),
            tuple(section["proportions"]),
            float(section["n"]),
            float(section["tau0"]),
        )
    except (AltspError, TypeError, ValueError) as e:
        raise ConfigError(f"plan: {e}") from e
    problems = plan.violations()
    if problems:
        raise ConfigError(f"plan: {'; '.join(problems)}")
    return plan


def config_from_dict(doc: Optional[Mapping]) -> RunConfig:
    """Validate a configuration document and apply defaults."""
    doc = doc or {}
    _check_keys(doc, TOP_LEVEL_KEYS, "")

    try:
        objective = Objective(doc.get("objective", Objective.COST.value))
    except ValueError:
        raise ConfigError(
            f"objective must be cost or variance, got {doc.get('objective')!r}"
        )
    if "cost" in doc and not doc["cost"] and objective is Objective.COST:
        raise ConfigError("cost spec required")

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")

    sections = {}
    for name, cls in SECTION_TYPES.items():
        values = doc.get(name) or {}
        if name == "case_study" and "seed" not in values:
            values = {**values, "seed": seed}
        sections[name] = _build(cls, values, name)

    return RunConfig(
        objective=objective,
        preset=doc.get("preset"),
        seed=seed,
        output_dir=doc.get("output_dir"),
        risks=_build_risks(doc),
        model=_build_model(doc.get("model")),
        plan=_build_plan(doc.get("plan")),
        **sections,
    )


def read_config_document(path) -> Tuple[Dict[str, Any], bytes]:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        doc = yaml.safe_load(raw) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a mapping at the top level")
    return doc, raw


def parse_config(path, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Read and validate a YAML configuration.

    ``overrides`` holds command-line values for top-level keys; a ``preset``
    override replaces any ``risks`` section of the file.
    """
    doc, _ = read_config_document(path)
    return config_from_dict(apply_overrides(doc, overrides))


def apply_overrides(
    doc: Mapping[str, Any], overrides: Optional[Mapping[str, Any]]
) -> Dict[str, Any]:
    merged = dict(doc)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "preset" and "risks" in merged:
            logger.info("preset %s replaces the risks section of the config", value)
            merged.pop("risks")
        merged[key] = value
    return merged


# ---------------------------------------------------------------------- #
# Writing
# ---------------------------------------------------------------------- #
def _plain(value):
    if dataclasses.is_dataclass(value):
        return {k: _plain(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Objective):
        return value.value
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


def to_dict(config: RunConfig) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "objective": config.objective.value,
        "seed": config.seed,
    }
    if config.preset is not None:
        doc["preset"] = config.preset
    if config.output_dir is not None:
        doc["output_dir"] = config.output_dir
    if config.risks is not None:
        doc["risks"] = _plain(config.risks)
    doc["cost"] = _plain(config.cost)
    doc["fixed"] = _plain(config.fixed)
    doc["model"] = {
        "mu_knots": list(config.model.mu_knots.cuts),
        "mu_gamma": config.model.mu_gamma.tolist(),
        "sigma_knots": list(config.model.sigma_knots.cuts),
        "sigma_gamma": config.model.sigma_gamma.tolist(),
    }
    doc["link"] = _plain(config.link)
    if config.plan is not None:
        doc["plan"] = {
            "stresses": list(config.plan.stresses),
            "proportions": list(config.plan.proportions),
            "n": config.plan.n,
            "tau0": config.plan.tau0,
        }
    optimizer = _plain(config.optimizer)
    optimizer.pop("seed")
    doc["optimizer"] = optimizer
    doc["case_study"] = _plain(config.case_study)
    doc["benchmark"] = _plain(config.benchmark)
    doc["oc"] = _plain(config.oc)
    doc["data"] = _plain(config.data)
    return doc


def canonical_yaml(config: RunConfig) -> str:
    return yaml.safe_dump(to_dict(config), sort_keys=True)


def write_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(to_dict(config), f, sort_keys=False)


def config_hash(config: RunConfig, raw: Optional[bytes] = None) -> str:
    """SHA-256 of the config file bytes, or of the canonical YAML."""
    payload = raw if raw is not None else canonical_yaml(config).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()

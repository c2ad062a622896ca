"""Run configuration: one JSON document validated before any compute."""
import json
import zlib
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .admm import AdmmConfig
from .network import Architecture
from .path import PathSpec
from .penalties import PenaltySpec

TABLE2_GAMMAS = [0.0, 0.67, 1.33, 2.0]
TABLE2_MUS = [0.10, 1.00, 1.50]


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataConfig(_Strict):
    path: Optional[str] = None                  # None -> bundled Iris
    feature_columns: Optional[list[Union[str, int]]] = None
    label_column: Union[str, int] = -1
    header: bool = True
    target: Literal["class", "real"] = "class"
    standardize: bool = True
    train_frac: Optional[float] = Field(0.7, gt=0, lt=1)


class ArchConfig(_Strict):
    layer_dims: list[int] = Field(default_factory=lambda: [3, 10], min_length=1)
    links: list[Literal["linear", "sigmoid", "tanh", "rectlu"]] = Field(
        default_factory=lambda: ["sigmoid"])
    loss: Literal["multinomial", "squared_error"] = "multinomial"

    @field_validator("layer_dims")
    @classmethod
    def _positive(cls, v):
        if any(d < 1 for d in v):
            raise ValueError("layer sizes must be >= 1")
        return v

    def build(self, input_dim):
        return Architecture(input_dim, tuple(self.layer_dims), tuple(self.links), self.loss)


class PenaltyConfig(_Strict):
    family: Literal["none", "l1", "l2"] = "l1"
    gamma_w: float = Field(0.0, ge=0)
    penalize_bias: bool = True

    def build(self):
        return PenaltySpec(self.family, self.gamma_w, self.penalize_bias)


class StepPolicyConfig(_Strict):
    kind: Literal["fixed", "backtracking"] = "backtracking"
    gamma: float = Field(1.0, gt=0)
    beta: float = Field(0.5, gt=0, lt=1)


class AdmmSection(_Strict):
    max_outer: int = Field(1000, ge=1)
    z_inner: int = Field(10, ge=1)
    w_inner: int = Field(25, ge=1)
    tol_primal: Optional[float] = Field(None, gt=0)
    tol_dual: Optional[float] = Field(None, gt=0)
    step_policy: StepPolicyConfig = Field(default_factory=StepPolicyConfig)
    mu: Union[float, list[float]] = 1.0
    block_order: Literal["zwu", "wzu"] = "zwu"
    residual_balancing: bool = False
    prox_iters: int = Field(50, ge=1)
    prox_tol: float = Field(1e-8, gt=0)
    init_scale: float = Field(0.1, gt=0)

    @field_validator("mu")
    @classmethod
    def _mu_positive(cls, v):
        vals = v if isinstance(v, list) else [v]
        if not vals or any(m <= 0 for m in vals):
            raise ValueError("mu must be strictly positive")
        return v

    def build(self, seed):
        return AdmmConfig(max_outer=self.max_outer, z_inner=self.z_inner, w_inner=self.w_inner,
                          tol_primal=self.tol_primal, tol_dual=self.tol_dual,
                          step_policy=self.step_policy.kind, gamma=self.step_policy.gamma,
                          beta=self.step_policy.beta, mu=self.mu, seed=seed,
                          init_scale=self.init_scale, block_order=self.block_order,
                          residual_balancing=self.residual_balancing,
                          prox_iters=self.prox_iters, prox_tol=self.prox_tol)


class PathSection(_Strict):
    gamma_grid: list[float] = Field(default_factory=lambda: list(TABLE2_GAMMAS), min_length=1)
    mu_grid: list[float] = Field(default_factory=lambda: list(TABLE2_MUS), min_length=1)
    warm_start: bool = True
    replicates: int = Field(5, ge=1)

    @field_validator("gamma_grid")
    @classmethod
    def _ascending(cls, v):
        if any(g < 0 for g in v):
            raise ValueError("gamma_w values must be nonnegative")
        if v != sorted(v):
            raise ValueError("gamma_grid must be ascending")
        return v

    @field_validator("mu_grid")
    @classmethod
    def _mu_positive(cls, v):
        if any(m <= 0 for m in v):
            raise ValueError("mu values must be positive")
        return v


class ModelEntry(_Strict):
    name: str
    arch: ArchConfig
    penalty: PenaltyConfig = Field(default_factory=PenaltyConfig)


class SelectSection(_Strict):
    models: list[ModelEntry] = Field(default_factory=list)
    criterion: Literal["ic", "sure"] = "ic"
    c: float = Field(2.0, gt=0)
    sigma2: Optional[float] = Field(None, gt=0)
    df_mode: Literal["jacobian", "perturb"] = "jacobian"
    eps: Optional[float] = Field(None, gt=0)


class RunConfig(_Strict):
    seed: int = 0
    data: DataConfig = Field(default_factory=DataConfig)
    arch: ArchConfig = Field(default_factory=ArchConfig)
    penalty: PenaltyConfig = Field(default_factory=PenaltyConfig)
    admm: AdmmSection = Field(default_factory=AdmmSection)
    path: PathSection = Field(default_factory=PathSection)
    select: SelectSection = Field(default_factory=SelectSection)
    output_dir: Optional[str] = None

    def path_spec(self):
        p = self.path
        seeds = [substream(self.seed, f"path/{r}") for r in range(p.replicates)]
        return PathSpec(tuple(p.gamma_grid), tuple(p.mu_grid), p.warm_start, tuple(seeds),
                        self.penalty.family if self.penalty.family != "none" else "l1",
                        self.penalty.penalize_bias)


def substream(seed, name):
    """Deterministic child seed for the named random stream."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def _format_validation(err):
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(obj):
    try:
        return RunConfig.model_validate(obj)
    except ValidationError as e:
        raise ConfigError(_format_validation(e)) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_config(obj)

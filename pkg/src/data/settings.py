"""
Solver settings.

Defaults can be overridden from the environment (LV_<FIELD>, loaded from .env), then by
the spec file's [solver] table, then by command-line flags.
"""

import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

load_dotenv()


class SolverSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_res: float = Field(1e-8, gt=0)  # system solves, sup norm of the raw residual
    logistic_tol: float = Field(1e-9, gt=0)
    linear_tol: float = Field(1e-12, gt=0)
    eigen_tol: float = Field(1e-10, gt=0)
    newton_max_iter: int = Field(200, ge=1)
    picard_max_sweeps: int = Field(2000, ge=1)
    logistic_max_iter: int = Field(200000, ge=1)
    eigen_max_iter: int = Field(10000, ge=1)
    invertibility_max_iter: int = Field(500, ge=1)
    cluster_tol: float = Field(1e-6, gt=0)
    extinction_tol: float = Field(1e-6, gt=0)
    bounds_slack: float = Field(1e-6, ge=0)
    invertibility_rel_tol: float = Field(1e-8, gt=0)
    scan_samples: int = Field(10000, ge=10)
    max_workers: int = Field(1, ge=1)
    logistic_newton_polish: bool = True

    @classmethod
    def from_env(cls) -> "SolverSettings":
        overrides = {}
        for name in cls.model_fields:
            raw = os.getenv(f"LV_{name.upper()}")
            if raw is not None:
                overrides[name] = raw
        return cls(**overrides)

    def with_overrides(self, **overrides) -> "SolverSettings":
        """Validated copy; None values are ignored."""
        update = {key: value for key, value in overrides.items() if value is not None}
        if not update:
            return self
        return SolverSettings(**{**self.model_dump(), **update})


@lru_cache(maxsize=1)
def get_settings() -> SolverSettings:
    return SolverSettings.from_env()


def resolve(settings: SolverSettings | None) -> SolverSettings:
    return settings if settings is not None else get_settings()

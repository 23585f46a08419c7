"""
Sweep plan model
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.scenario import Policy


class RunPlan(BaseModel):
    """Which (density, seed, policy) runs a sweep performs"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: Optional[str] = Field(default=None, description="Scenario file; defaults apply when omitted")
    densities: List[int] = Field(default_factory=lambda: [100, 400, 700, 1000])
    seeds: List[int] = Field(default_factory=lambda: list(range(10)))
    policies: List[Policy] = Field(default_factory=lambda: ["th_gcn", "max_sinr"])
    output_dir: Optional[str] = None

    @field_validator("densities", "seeds", "policies")
    @classmethod
    def non_empty_unique(cls, v, info):
        if not v:
            raise ValueError(f"{info.field_name} must not be empty")
        if len(set(v)) != len(v):
            raise ValueError(f"{info.field_name} contains duplicates")
        return v

    @field_validator("densities")
    @classmethod
    def positive_densities(cls, v):
        if any(d < 1 for d in v):
            raise ValueError("densities must be >= 1")
        return v

    @field_validator("seeds")
    @classmethod
    def non_negative_seeds(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("seeds must be >= 0")
        return v

    @property
    def n_runs(self) -> int:
        return len(self.densities) * len(self.seeds) * len(self.policies)

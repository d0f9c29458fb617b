from pydantic import BaseModel, Field, model_validator
from typing import List, Literal, Optional

from gaussmac.core.config import settings
from gaussmac.schemas.channel_schemas import ChannelConfig, MemoryConfig

CommandName = Literal[
    "point-capacity",
    "coherent-region",
    "outer-bounds",
    "ea-total",
    "gaussian-region",
    "memory",
    "oracle-check",
    "eta-sweep",
]

CHANNEL_KEYS = ("s", "w", "delta", "nb", "interference", "strict")
MEMORY_KEYS = ("epsilon", "gamma", "n", "nb", "eta", "ns")


# ============= Input Schemas =============
class BudgetConfig(BaseModel):
    ns: List[float]

    @model_validator(mode="after")
    def non_negative(self):
        if any(x < 0 for x in self.ns):
            raise ValueError("ns entries must be non-negative")
        return self


class SweepConfig(BaseModel):
    """Total budget N_S on a log grid, split between senders by fixed fractions"""

    fractions: Optional[List[float]] = None
    log10_min: float = -5.0
    log10_max: float = 0.0
    points: int = Field(default=21, ge=2)
    etas: Optional[List[float]] = None  # η_1 grid for eta-sweep

    @model_validator(mode="after")
    def ordered_range(self):
        if self.log10_max < self.log10_min:
            raise ValueError("log10_max must not be below log10_min")
        if self.fractions is not None and any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be non-negative")
        return self


class OptimizerSettings(BaseModel):
    starts: int = Field(default_factory=lambda: settings.OPTIMIZER_STARTS, ge=1)
    maxiter: int = Field(default_factory=lambda: settings.OPTIMIZER_MAXITER, ge=1)
    rtol: float = Field(default_factory=lambda: settings.OPTIMIZER_RTOL, gt=0)
    rays: int = Field(default_factory=lambda: settings.DEFAULT_RAYS, ge=1)
    seed: int = 0
    workers: int = Field(default_factory=lambda: settings.MAX_WORKERS, ge=1)


class RunConfig(BaseModel):
    """
    One CLI run. Config files may nest sections ("channel", "memory", "budget")
    or use the flat channel / memory documents directly.
    """

    command: CommandName
    channel: Optional[ChannelConfig] = None
    memory: Optional[MemoryConfig] = None
    budget: Optional[BudgetConfig] = None
    sweep: Optional[SweepConfig] = None
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    oracle: bool = False

    @model_validator(mode="before")
    @classmethod
    def lift_flat_documents(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "memory" not in data and "epsilon" in data:
            data["memory"] = {k: data.pop(k) for k in MEMORY_KEYS if k in data}
        if "channel" not in data and any(k in data for k in CHANNEL_KEYS):
            data["channel"] = {k: data.pop(k) for k in CHANNEL_KEYS if k in data}
        if "budget" not in data and "ns" in data:
            data["budget"] = {"ns": data.pop("ns")}
        return data

    @model_validator(mode="after")
    def sections_for_command(self):
        if self.command == "memory":
            if self.memory is None:
                raise ValueError("the memory command needs a memory config")
            return self
        if self.channel is None:
            raise ValueError(f"the {self.command} command needs a channel config")
        if self.command == "eta-sweep":
            if self.channel.interference is None:
                raise ValueError("eta-sweep needs an interference channel config")
            if self.channel.senders != 2:
                raise ValueError("eta-sweep is defined for two senders")
        if self.budget is None and self.sweep is None:
            raise ValueError("give a budget ('ns') or a sweep")
        if self.budget is not None and len(self.budget.ns) != self.channel.senders:
            raise ValueError(f"budget needs {self.channel.senders} entries, got {len(self.budget.ns)}")
        if self.sweep is not None and self.sweep.fractions is not None:
            if len(self.sweep.fractions) != self.channel.senders:
                raise ValueError("sweep fractions need one entry per sender")
        return self

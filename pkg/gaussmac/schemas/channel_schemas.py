from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional, Tuple

BgcClassName = Literal["thermal-loss", "awgn", "amplifier", "conjugate-amplifier"]


# ============= Point-to-point Schemas =============
class BgcConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    bgc_class: BgcClassName = Field(alias="class")
    w2: float = Field(ge=0)
    nb: float = Field(ge=0)


class InterferenceConfig(BaseModel):
    eta: List[float] = Field(min_length=1)
    bgc: BgcConfig


# ============= Channel Schemas =============
class ChannelConfig(BaseModel):
    """Either explicit weights (s, w, delta, nb) or an interference description"""

    s: Optional[int] = Field(default=None, ge=1)
    w: Optional[List[Tuple[float, float]]] = None  # [re, im] per sender
    delta: Optional[List[int]] = None
    nb: Optional[float] = Field(default=None, ge=0)
    interference: Optional[InterferenceConfig] = None
    strict: bool = True

    @field_validator("w", mode="before")
    @classmethod
    def real_weights_allowed(cls, value):
        if value is None:
            return value
        return [[x, 0.0] if isinstance(x, (int, float)) else x for x in value]

    @field_validator("delta")
    @classmethod
    def flags_are_binary(cls, value):
        if value is not None and any(d not in (0, 1) for d in value):
            raise ValueError("delta entries must be 0 or 1")
        return value

    @model_validator(mode="after")
    def one_form_only(self):
        explicit = [self.s, self.w, self.delta, self.nb]
        if self.interference is not None:
            if any(x is not None for x in explicit):
                raise ValueError("give either 'interference' or explicit s/w/delta/nb, not both")
            return self
        if any(x is None for x in explicit):
            raise ValueError("explicit channels need all of s, w, delta and nb")
        if len(self.w) != self.s or len(self.delta) != self.s:
            raise ValueError(f"w and delta must have s={self.s} entries")
        return self

    @property
    def senders(self) -> int:
        if self.interference is not None:
            return len(self.interference.eta)
        return self.s


# ============= Memory Schemas =============
class MemoryConfig(BaseModel):
    epsilon: float = Field(ge=0, le=1)
    gamma: float = Field(ge=0, le=1)
    n: int = Field(ge=1)
    nb: float = Field(ge=0)
    eta: List[float] = Field(min_length=1)
    ns: List[float]

    @model_validator(mode="after")
    def budget_matches_senders(self):
        if len(self.ns) != len(self.eta):
            raise ValueError(f"ns needs one entry per sender ({len(self.eta)})")
        if any(x < 0 for x in self.ns):
            raise ValueError("ns entries must be non-negative")
        return self

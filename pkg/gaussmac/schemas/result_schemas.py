from pydantic import BaseModel
from typing import Dict, List, Optional


# ============= Region Output =============
class RayRecord(BaseModel):
    phi: Optional[float] = None  # only for two-sender rays
    direction: List[float]
    rates: List[float]
    r: List[float]
    theta: List[float]
    iterations: int
    converged: bool
    r_trace: List[float] = []


class RegionReport(BaseModel):
    s: int
    ns: List[float]
    rays: List[RayRecord]
    hull: List[List[float]]
    tmsv_constraints: Dict[str, float]


# ============= Bound Output =============
class OuterBoundsRecord(BaseModel):
    kind: str
    condition: str
    individual: List[float]
    total: float
    dark_counts: List[float]
    alternative_total: Optional[float] = None

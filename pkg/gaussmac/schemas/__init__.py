from gaussmac.schemas.channel_schemas import (
    BgcConfig, InterferenceConfig, ChannelConfig, MemoryConfig
)

from gaussmac.schemas.run_schemas import (
    BudgetConfig, SweepConfig, OptimizerSettings, RunConfig
)

from gaussmac.schemas.result_schemas import (
    RayRecord, RegionReport, OuterBoundsRecord
)

__all__ = [
    # Channel schemas
    "BgcConfig", "InterferenceConfig", "ChannelConfig", "MemoryConfig",

    # Run schemas
    "BudgetConfig", "SweepConfig", "OptimizerSettings", "RunConfig",

    # Result schemas
    "RayRecord", "RegionReport", "OuterBoundsRecord",
]

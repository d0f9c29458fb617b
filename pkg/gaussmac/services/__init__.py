from gaussmac.services.bgmac import PhaseInsensitiveBgmac, PointToPointBgc, BgcClass
from gaussmac.services.capacities import EnergyBudget, SenderSet

__all__ = ["PhaseInsensitiveBgmac", "PointToPointBgc", "BgcClass", "EnergyBudget", "SenderSet"]

from gaussmac.api.commands import COMMANDS

__all__ = ["COMMANDS"]

"""Accurate pouring with a peephole LSTM, a simulated pouring plant, and self-supervised practicing."""
from .core import CONSTANTS, ContainerSpec, ErrorStats, TrialRecord, volume_to_weight, weight_to_volume
from .errors import PourSkillError

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "ContainerSpec",
    "ErrorStats",
    "PourSkillError",
    "TrialRecord",
    "volume_to_weight",
    "weight_to_volume",
]

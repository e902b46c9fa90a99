"""Channel-aware sparse grant transmission over OFDM TDD links: simulator, bounds and latency model."""
from .spectrum import SensingDims, SparseFreqVector
from .channel import ChannelRealization, NoiseSpec
from .montecarlo import ExperimentConfig, CellResult, run_sweep, compare_rules

__all__ = [
    "SensingDims", "SparseFreqVector", "ChannelRealization", "NoiseSpec",
    "ExperimentConfig", "CellResult", "run_sweep", "compare_rules",
]

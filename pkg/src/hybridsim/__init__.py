"""Subspace estimation and decomposition for hybrid analog-digital MIMO links."""

from .channel import ChannelRealization, HybridConfig, TrialStreams, sample_channel
from .hybridlink import mtqr, overhead, raid_echo, sed
from .metrics import optimal_rate, user_rate

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "HybridConfig",
    "TrialStreams",
    "sample_channel",
    "mtqr",
    "overhead",
    "raid_echo",
    "sed",
    "optimal_rate",
    "user_rate",
]

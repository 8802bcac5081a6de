"""Non-contact hydration sensing over a simulated OFDM radio link.

The package covers the full pipeline: an OFDM/QPSK sounding modem with
per-subcarrier channel frequency response (CFR) estimation, a parametric
body-channel simulator whose statistics depend on hydration state, CFR
denoising, a synthetic labelled dataset store, from-scratch classifiers,
and a K-fold evaluation harness with confusion-matrix reports.
"""

from hydrasense.modem import OfdmFrameCfg, OfdmFrame, CfrSnapshot
from hydrasense.channel import ChannelModel, HydrationProfile

__version__ = "0.1.0"

__all__ = [
    "OfdmFrameCfg",
    "OfdmFrame",
    "CfrSnapshot",
    "ChannelModel",
    "HydrationProfile",
    "__version__",
]

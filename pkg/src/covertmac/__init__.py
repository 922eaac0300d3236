"""Covert and non-covert rate-key regions of multiple-access and interference
channels with a warden, and a simulator of the random coding scheme."""
from .channel import (DmicChannel, Dmmac, GeneralMac, load, paper_channel, save, validate)
from .region import CovertParams, RateKeyTuple, RegionQuery, corner, maximize

__version__ = "0.1.0"

__all__ = ["CovertParams", "DmicChannel", "Dmmac", "GeneralMac", "RateKeyTuple", "RegionQuery",
           "__version__", "corner", "load", "maximize", "paper_channel", "save", "validate"]

#!/usr/bin/env python3

from .bench import bench
from .cost import cost
from .factorize import factorize
from .smoothing import smoothing
from .synth import synth
from .transfer_check import transfer_check

__all__ = [
    "bench",
    "cost",
    "factorize",
    "smoothing",
    "synth",
    "transfer_check",
]

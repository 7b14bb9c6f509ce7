#!/usr/bin/env python3

from .main import cli, configure_logging

__all__ = [
    "configure_logging",
    "cli",
]

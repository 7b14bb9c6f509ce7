#!/usr/bin/env python3

import logging
from pathlib import Path

from ..datasets import save_pgm_dir, synth_smooth_dataset

__all__ = ["synth"]


def synth(height: int, width: int, n: int, blobs: int, seed: int, out: str) -> str:
    """Write a synthetic smooth-image dataset as a directory of PGM files.

    Args:
        height: Image height in pixels
        width: Image width in pixels
        n: Number of images
        blobs: Gaussian bumps per image
        seed: Generator seed
        out: Output directory (created if missing)

    Returns:
        A one-line report
    """
    dataset = synth_smooth_dataset(height, width, n, blobs, seed)
    written = save_pgm_dir(dataset, out)
    logging.info(f"Wrote {len(written)} images to {out}")
    return f"wrote {len(written)} {dataset.grid} images to {Path(out)}\n"

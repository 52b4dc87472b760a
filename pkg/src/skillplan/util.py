"""Seeding and logging helpers."""

from __future__ import annotations

import hashlib
import logging
import os

import numpy as np


def stable_seed(*parts: object) -> int:
    """Derive a 63-bit seed from arbitrary labels, stable across runs."""
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def rng_from(*parts: object) -> np.random.Generator:
    """A fresh PCG64 generator keyed by the given labels."""
    return np.random.default_rng(stable_seed(*parts))


def get_logger(name: str) -> logging.Logger:
    logger = logging.getLogger(name)
    if not logging.getLogger("skillplan").handlers:
        root = logging.getLogger("skillplan")
        level = os.environ.get("SKILLPLAN_LOG", "WARNING").upper()
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s")
        )
        root.addHandler(handler)
        root.setLevel(level)
    return logger

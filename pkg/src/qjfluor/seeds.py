"""Seed derivation for reproducible, order-independent sub-streams."""

import hashlib

import numpy as np


def derive_seed(master, key):
    """Return a 63-bit seed derived from ``master`` and a task key.

    The derivation is ``sha256(f"{master}/{key}")`` truncated to its first
    eight bytes (little endian) with the top bit cleared. ``key`` may be a
    stage name or an integer task index, so per-stage seeds and ensemble
    members can be computed independently of execution order.
    """
    digest = hashlib.sha256(f"{int(master)}/{key}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)


def child_rng(master, key):
    return np.random.default_rng(derive_seed(master, key))

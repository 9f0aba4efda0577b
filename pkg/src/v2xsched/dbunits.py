"""Decibel/linear conversions used across the simulator."""

from __future__ import annotations

import numpy as np


def db_to_lin(db):
    """10^(db/10); works on scalars and arrays."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if isinstance(db, np.ndarray) else 10.0 ** (db / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * np.log10(mw)

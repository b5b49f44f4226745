"""Feature preprocessing pipeline for raw measurement tables.

Steps are applied in the order given. Parametric steps (standardize,
minmax) record their fitted statistics so the same transform can be
replayed on a second sample when shared statistics are wanted; by default
each sample is processed independently.
"""

import warnings

import numpy as np

from .core import PointSet, as_pointset
from .errors import InvalidArgumentError, InvalidDataError

STEP_NAMES = ("log1p", "standardize", "minmax", "drop_zero_rows")


def parse_steps(text: str):
    """Parse 'log1p,drop_zero_rows:0.4,standardize' into step tuples."""
    steps = []
    for raw in text.split(","):
        raw = raw.strip()
        if not raw:
            continue
        if ":" in raw:
            name, arg = raw.split(":", 1)
            steps.append((name.strip(), float(arg)))
        else:
            steps.append((raw, None))
    return steps


def _normalize_steps(steps):
    out = []
    for s in steps:
        if isinstance(s, str):
            name, arg = s, None
        else:
            name, arg = s
        if name not in STEP_NAMES:
            raise InvalidArgumentError(f"unknown preprocess step '{name}'")
        if name == "drop_zero_rows":
            if arg is None:
                arg = 0.4
            if not 0.0 < arg <= 1.0:
                raise InvalidArgumentError(f"drop_zero_rows threshold must be in (0, 1], got {arg}")
        out.append((name, arg))
    return out


def _warn_on_order(steps):
    names = [n for n, _ in steps]
    if "log1p" in names and "standardize" in names:
        if names.index("standardize") < names.index("log1p"):
            warnings.warn(
                "standardize before log1p produces negative inputs to log1p",
                UserWarning,
            )


def preprocess(ps, steps):
    """Apply an ordered list of steps; returns (PointSet, fitted transforms).

    steps: list of names or (name, arg) pairs out of
    log1p | standardize | minmax | drop_zero_rows(threshold).
    Constant features pass through standardize/minmax unscaled, with a
    warning rather than a division by zero.
    """
    ps = as_pointset(ps)
    steps = _normalize_steps(steps)
    _warn_on_order(steps)
    X = ps.data.copy()
    fits = []
    for name, arg in steps:
        if name == "log1p":
            if np.any(X <= -1.0):
                bad = np.argwhere(X <= -1.0)[0]
                raise InvalidDataError(
                    f"log1p undefined at row {bad[0]}, column {bad[1]} (value <= -1)"
                )
            X = np.log1p(X)
            fits.append(("log1p", None))
        elif name == "standardize":
            mean = X.mean(axis=0)
            std = X.std(axis=0)
            if np.any(std == 0):
                warnings.warn("constant feature(s): centered but not scaled", UserWarning)
            safe = np.where(std == 0, 1.0, std)
            X = (X - mean) / safe
            fits.append(("standardize", (mean, safe)))
        elif name == "minmax":
            lo = X.min(axis=0)
            span = X.max(axis=0) - lo
            if np.any(span == 0):
                warnings.warn("constant feature(s): shifted but not scaled", UserWarning)
            safe = np.where(span == 0, 1.0, span)
            X = (X - lo) / safe
            fits.append(("minmax", (lo, safe)))
        else:  # drop_zero_rows
            frac = (X == 0).mean(axis=1)
            keep = frac < arg
            if not keep.any():
                raise InvalidDataError(
                    f"drop_zero_rows({arg}) removed every row"
                )
            X = X[keep]
            fits.append(("drop_zero_rows", arg))
    return PointSet(X, columns=ps.columns), fits


def apply_fitted(ps, fits):
    """Replay fitted transforms on another sample (shared-statistics mode).

    drop_zero_rows is inherently per-sample and is re-evaluated on the new
    data; the parametric steps reuse the stored statistics.
    """
    ps = as_pointset(ps)
    X = ps.data.copy()
    for name, fit in fits:
        if name == "log1p":
            if np.any(X <= -1.0):
                raise InvalidDataError("log1p undefined (value <= -1)")
            X = np.log1p(X)
        elif name == "standardize":
            mean, safe = fit
            X = (X - mean) / safe
        elif name == "minmax":
            lo, safe = fit
            X = (X - lo) / safe
        else:
            frac = (X == 0).mean(axis=1)
            keep = frac < fit
            if not keep.any():
                raise InvalidDataError(f"drop_zero_rows({fit}) removed every row")
            X = X[keep]
    return PointSet(X, columns=ps.columns)

"""Input validation helpers shared by the estimators and experiments."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import EmptyDatabase, MixedCircuits
from .multicast import MeasurementDatabase, check_variant


def check_outcomes(X, variant="Z", n=None):
    """Validate a 2-D array of outcome bits and return ``(bits, n)``.

    ``X`` may also be a :class:`MeasurementDatabase`, in which case its
    circuit must match ``variant``. For GHZ data column 0 is the sign bit.
    """
    variant = check_variant(variant)
    if isinstance(X, MeasurementDatabase):
        if X.variant != variant:
            raise MixedCircuits(f"expected {variant} data, got circuit {X.circuit!r}")
        if len(X) == 0:
            raise EmptyDatabase("measurement database is empty")
        return X.outcomes, X.n
    X = np.asarray(X)
    if X.ndim == 2 and X.shape[0] == 0:
        raise EmptyDatabase("no outcome rows")
    X = check_array(X, dtype=np.int8, ensure_min_features=1)
    if np.any((X != 0) & (X != 1)):
        raise ValueError("outcome arrays must contain only 0/1 entries")
    width = X.shape[1]
    inferred = width + 1 if variant == "Z" else width
    if n is not None and n != inferred:
        raise ValueError(f"outcome width {width} does not match n={n} for the {variant} variant")
    if inferred < 3:
        raise ValueError(f"outcome width {width} implies fewer than 3 end nodes")
    return X, inferred


def check_probability_vector(theta, n=None, name="theta"):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if n is not None and theta.shape[0] != n:
        raise ValueError(f"{name} must have {n} entries, got {theta.shape[0]}")
    if np.any(~np.isfinite(theta)) or np.any(theta < 0) or np.any(theta > 1):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return theta


def check_fallback(fallback):
    if fallback not in ("raise", "clamp"):
        raise ValueError(f"fallback must be 'raise' or 'clamp', got {fallback!r}")
    return fallback

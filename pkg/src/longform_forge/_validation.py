"""Input validation helpers used by the estimators and free functions."""

import numbers

import numpy as np

from .errors import ConfigError


def check_probability(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ConfigError(f"{name} must be a real number, got {value!r}")
    if not 0.0 <= float(value) <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_int(value, name, minimum=None, strict=False):
    """Validate an integer parameter; ``strict`` makes ``minimum`` exclusive."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None:
        if strict and value <= minimum:
            raise ConfigError(f"{name} must be > {minimum}, got {value}")
        if not strict and value < minimum:
            raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_choice(value, name, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
    return value


def check_seed(seed):
    """Map any integer seed onto the unsigned 64-bit range used by SeedSequence."""
    if seed is None:
        raise ConfigError("seed must be set")
    seed = check_int(seed, "seed")
    return seed & 0xFFFFFFFFFFFFFFFF


def check_samples(samples):
    """Coerce to a contiguous 1-D float32 array with finite values."""
    arr = np.ascontiguousarray(samples, dtype=np.float32)
    if arr.ndim != 1:
        raise ValueError(f"audio must be mono (1-D), got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("audio contains non-finite samples")
    return arr


def check_is_fitted(estimator, attributes):
    from sklearn.exceptions import NotFittedError

    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )

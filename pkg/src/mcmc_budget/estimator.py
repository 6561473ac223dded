"""Monte Carlo estimation of the absolute mean error of time averages.

The estimand is e1 = E|S - mu| where S is the burn-in-discarded time
average of f along the chain and mu the exact stationary expectation
supplied by the chain model.  Replications run on per-index counter-based
streams and are reduced by fixed-index aggregation, so results are
bit-identical however the work is chunked.

Because |S - mu| itself can have infinite variance in the heavy-tailed
regimes under study, the spread of the estimate is reported as half the
interquartile range of contiguous block means (median-of-means style)
instead of a standard error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

__all__ = [
    "ErrorEstimate",
    "RateFit",
    "abs_deviations",
    "estimate_e1",
    "estimate_ep",
    "exact_e1_small",
    "rate_regression",
    "sample_mean",
]

_DEFAULT_CHUNK_ELEMENTS = 8_000_000
_UNCERTAINTY_BLOCKS = 20
_ENUMERATION_BUDGET = 10**7


@dataclass(frozen=True)
class ErrorEstimate:
    """Replicated estimate of the absolute mean error."""

    e1_hat: float
    uncertainty: float
    replications: int
    n: int
    n0: int

    def __post_init__(self) -> None:
        if self.e1_hat < 0:
            raise DomainError("e1_hat must be nonnegative")
        if self.uncertainty < 0:
            raise DomainError("uncertainty must be nonnegative")
        if self.replications < 2:
            raise DomainError("at least 2 replications are required")


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log error against log sample size."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple


def sample_mean(trajectory, f, n: int, n0: int) -> float:
    """Time average of ``f`` over positions ``n0+1 .. n0+n`` (1-indexed).

    ``f`` is either a callable applied elementwise or a value vector
    indexed by integer states.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n0 < 0:
        raise DomainError("n0 must be nonnegative")
    path = np.asarray(trajectory)
    if path.shape[0] < n + n0:
        raise DomainError(
            f"trajectory of length {path.shape[0]} is too short for "
            f"n + n0 = {n + n0}")
    window = path[n0:n0 + n]
    if callable(f):
        values = np.asarray(f(window), dtype=float)
    else:
        values = np.asarray(f, dtype=float)[window.astype(np.int64)]
    return float(np.mean(values))


def _window_means(model, f, n: int, n0: int, rngs) -> np.ndarray:
    values = model.batch_values(f, n + n0, rngs)
    return values[:, n0:].mean(axis=1)


def abs_deviations(model, f, n: int, n0: int, replications: int,
                   master_seed: int,
                   chunk_elements: int = _DEFAULT_CHUNK_ELEMENTS) -> np.ndarray:
    """Per-replication values of ``|S - mu|``, in replication order.

    Replication ``r`` consumes only its own derived stream, and the mean
    is taken once over the assembled vector, so the result does not depend
    on ``chunk_elements`` (the batching knob).
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n0 < 0:
        raise DomainError("n0 must be nonnegative")
    if replications < 2:
        raise DomainError("at least 2 replications are required")
    from .chains import derived_rng

    mu = model.expectation(f)
    length = n + n0
    rows_per_chunk = max(1, int(chunk_elements) // length)
    deviations = np.empty(replications)
    for start in range(0, replications, rows_per_chunk):
        stop = min(start + rows_per_chunk, replications)
        rngs = [derived_rng(master_seed, rep) for rep in range(start, stop)]
        deviations[start:stop] = np.abs(
            _window_means(model, f, n, n0, rngs) - mu)
    return deviations


def estimate_e1_windows(model, f, windows, replications: int,
                        master_seed: int,
                        chunk_elements: int = _DEFAULT_CHUNK_ELEMENTS):
    """Estimates of ``E|S - mu|`` for several ``(n, n0)`` windows at once.

    All windows observe the same walks, so a single generation pass of
    ``max(n + n0)`` steps serves every window; this is what makes sweeping
    many small windows affordable (deriving per-replication streams anew
    for each window costs far more than the walks themselves).  Because a
    shorter trajectory is a prefix of a longer one from the same stream,
    slicing the shared value matrix reproduces bit for bit what
    :func:`estimate_e1` returns for each window on its own.
    """
    windows = [(int(n), int(n0)) for n, n0 in windows]
    if not windows:
        raise DomainError("at least one window is required")
    for n, n0 in windows:
        if n < 1:
            raise DomainError("n must be at least 1")
        if n0 < 0:
            raise DomainError("n0 must be nonnegative")
    if replications < 2:
        raise DomainError("at least 2 replications are required")
    from .chains import derived_rng

    mu = model.expectation(f)
    length = max(n + n0 for n, n0 in windows)
    rows_per_chunk = max(1, int(chunk_elements) // length)
    deviations = np.empty((len(windows), replications))
    for start in range(0, replications, rows_per_chunk):
        stop = min(start + rows_per_chunk, replications)
        rngs = [derived_rng(master_seed, rep) for rep in range(start, stop)]
        values = model.batch_values(f, length, rngs)
        for k, (n, n0) in enumerate(windows):
            deviations[k, start:stop] = np.abs(
                values[:, n0:n0 + n].mean(axis=1) - mu)
    return [ErrorEstimate(e1_hat=float(np.mean(dev)),
                          uncertainty=_half_iqr_of_block_means(dev),
                          replications=replications, n=n, n0=n0)
            for (n, n0), dev in zip(windows, deviations)]


def _half_iqr_of_block_means(deviations: np.ndarray) -> float:
    blocks = min(_UNCERTAINTY_BLOCKS, deviations.shape[0])
    means = [float(np.mean(block))
             for block in np.array_split(deviations, blocks)]
    q1, q3 = np.percentile(means, [25.0, 75.0])
    return 0.5 * float(q3 - q1)


def estimate_e1(model, f, n: int, n0: int, replications: int,
                master_seed: int,
                chunk_elements: int = _DEFAULT_CHUNK_ELEMENTS) -> ErrorEstimate:
    """Replicated Monte Carlo estimate of ``E|S - mu|``."""
    deviations = abs_deviations(model, f, n, n0, replications, master_seed,
                                chunk_elements)
    return ErrorEstimate(
        e1_hat=float(np.mean(deviations)),
        uncertainty=_half_iqr_of_block_means(deviations),
        replications=replications,
        n=n,
        n0=n0,
    )


def estimate_ep(model, f, n: int, n0: int, p: float, replications: int,
                master_seed: int,
                chunk_elements: int = _DEFAULT_CHUNK_ELEMENTS) -> float:
    """Generalized error ``(E|S - mu|**p)**(1/p)`` for ``p`` in [1, 2].

    At ``p = 1`` this reproduces ``estimate_e1`` bit for bit on the same
    seeds; it is nondecreasing in ``p`` on a fixed replication set.
    """
    if not 1.0 <= p <= 2.0:
        raise DomainError("p must lie in [1, 2]")
    deviations = abs_deviations(model, f, n, n0, replications, master_seed,
                                chunk_elements)
    if p == 1.0:
        return float(np.mean(deviations))
    return float(np.mean(deviations**p) ** (1.0 / p))


def exact_e1_small(chain, nu, f_values, n: int, n0: int) -> float:
    """Exact ``E|S - mu|`` by summing over every trajectory.

    The initial distribution is propagated through the burn-in exactly,
    then all length-``n`` windows are expanded with their probabilities.
    Instances are admitted only while ``size ** (n + n0)`` stays within
    the 1e7 path-enumeration budget.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n0 < 0:
        raise DomainError("n0 must be nonnegative")
    size = chain.size
    if size ** (n + n0) > _ENUMERATION_BUDGET:
        raise DomainError(
            f"path-enumeration budget exceeded: {size}**{n + n0} > 1e7")
    f = np.asarray(f_values, dtype=float)
    kernel = np.asarray(chain.transition)
    if np.all(f == f.flat[0]):
        # constants cancel exactly; see FiniteChainModel.expectation
        mu = float(f.flat[0])
    else:
        mu = float(np.asarray(chain.stationary) @ f)
    weights = np.asarray(nu.nu)
    for _ in range(n0):
        weights = weights @ kernel
    # expand windows one step at a time; row r of the expansion carries
    # the probability and running f-sum of one partial trajectory
    probs = weights.astype(float)
    sums = f.copy()
    states = np.arange(size)
    for _ in range(n - 1):
        probs = (probs[:, None] * kernel[states, :]).ravel()
        sums = (sums[:, None] + f[None, :]).ravel()
        states = np.tile(np.arange(size), states.shape[0])
    return float(probs @ np.abs(sums / n - mu))


def rate_regression(points) -> RateFit:
    """Least-squares slope of log error against log sample size."""
    cleaned = tuple((float(n), float(e1)) for n, e1 in points)
    if len(cleaned) < 4:
        raise DomainError("rate regression needs at least 4 points")
    if any(n <= 0 for n, _ in cleaned):
        raise DomainError("sample sizes must be positive")
    if any(e1 <= 0 for _, e1 in cleaned):
        raise DomainError("error values must be positive to take logs")
    log_n = np.log([n for n, _ in cleaned])
    log_e = np.log([e1 for _, e1 in cleaned])
    slope, intercept = np.polyfit(log_n, log_e, 1)
    residuals = log_e - (slope * log_n + intercept)
    total = float(np.sum((log_e - log_e.mean()) ** 2))
    if total == 0.0:
        r_squared = 1.0
    else:
        r_squared = 1.0 - float(np.sum(residuals**2)) / total
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(1.0, max(0.0, r_squared)),
        points=cleaned,
    )

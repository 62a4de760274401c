"""Diversity-weight calibration against human ratings.

Exhaustively searches the 8-weight simplex on a fixed grid and keeps the
weights whose combined score correlates best (Pearson) with the ratings.
The search is reduced algebraically: corr(S @ w, r) depends on w only through
the sub-score covariances, so each candidate costs O(d^2) instead of O(n*d).
"""
from __future__ import annotations

import math
from itertools import chain, combinations
from typing import Sequence

import numpy as np

from .diversity import SUB_SCORE_NAMES, DiversityReport, DiversityWeights
from .errors import DegenerateRatingsError, InsufficientDataError, InvalidParameterError

DEFAULT_GRID_STEP = 0.05
MIN_SAMPLES = 3
_VARIANCE_FLOOR = 1e-24


def _simplex_grid(units: int, dims: int) -> np.ndarray:
    """All weight vectors w_i = k_i / units, k_i >= 0, sum k_i = units.

    Rows are in ascending lexicographic order of the weight tuple, which the
    caller relies on for deterministic tie-breaking.
    """
    # Stars and bars: a composition of `units` into `dims` parts corresponds
    # to `dims - 1` bar positions among units + dims - 1 slots.
    slots = units + dims - 1
    n_rows = math.comb(slots, dims - 1)
    bars = np.fromiter(
        chain.from_iterable(combinations(range(slots), dims - 1)),
        dtype=np.int64,
        count=n_rows * (dims - 1),
    ).reshape(n_rows, dims - 1)
    edges = np.concatenate(
        [
            np.full((n_rows, 1), -1, dtype=np.int64),
            bars,
            np.full((n_rows, 1), slots, dtype=np.int64),
        ],
        axis=1,
    )
    counts = edges[:, 1:] - edges[:, :-1] - 1
    return counts.astype(np.float64) / units


def calibrate_weights(
    samples: Sequence[tuple[DiversityReport, float]],
    step: float = DEFAULT_GRID_STEP,
) -> DiversityWeights:
    """Return grid weights maximizing Pearson correlation with the ratings.

    ``samples`` pairs a sub-score report with a human rating (1-10 scale).
    Ties resolve to the lexicographically smallest weight vector in the
    canonical sub-score order. Raises InsufficientDataError below three
    samples and DegenerateRatingsError when all ratings are equal.
    """
    if len(samples) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {len(samples)}")
    if step <= 0 or step > 1:
        raise InvalidParameterError(f"grid step must lie in (0, 1], got {step}")
    units = round(1.0 / step)
    if abs(units * step - 1.0) > 1e-9:
        raise InvalidParameterError(f"grid step {step} does not evenly divide 1.0")

    scores = np.array([report.sub_scores() for report, _ in samples], dtype=np.float64)
    ratings = np.array([rating for _, rating in samples], dtype=np.float64)

    ratings_centered = ratings - ratings.mean()
    var_ratings = float(ratings_centered @ ratings_centered) / len(ratings)
    if var_ratings <= _VARIANCE_FLOOR:
        raise DegenerateRatingsError("ratings have zero variance")

    scores_centered = scores - scores.mean(axis=0)
    cov_sr = scores_centered.T @ ratings_centered / len(ratings)
    cov_ss = scores_centered.T @ scores_centered / len(ratings)

    grid = _simplex_grid(units, len(SUB_SCORE_NAMES))
    numerators = grid @ cov_sr
    combined_var = np.einsum("ij,ij->i", grid @ cov_ss, grid)
    valid = combined_var > _VARIANCE_FLOOR
    if not np.any(valid):
        raise InsufficientDataError("sub-scores are constant across samples")

    correlations = np.full(len(grid), -np.inf)
    correlations[valid] = numerators[valid] / np.sqrt(combined_var[valid] * var_ratings)

    best = int(np.argmax(correlations))  # first max = lexicographically smallest
    return DiversityWeights.from_vector(grid[best])

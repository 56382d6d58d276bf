"""Block-means estimation for correlated, band-limited time series."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..errors import ArgumentError
from ..models import BlockEstimate, PowerFlowEstimate, SimConfig

logger = logging.getLogger(__name__)

# In-band correlation time is ~1/f_L; blocks span ten of them.
CORRELATION_SPANS = 10.0


def block_length_for(config: SimConfig) -> int:
    """Samples per block: ceil(10 * fs / f_L)."""
    return max(1, math.ceil(CORRELATION_SPANS * config.sample_rate / config.band_low))


def block_standard_error(
    samples: np.ndarray, block_length: int, min_blocks: int = 32
) -> BlockEstimate:
    """Mean of ``samples`` and its standard error from non-overlapping block means.

    When the series is too short for ``min_blocks`` blocks of the requested
    length, the block length shrinks so that ``min_blocks`` still fit.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ArgumentError("cannot estimate statistics of an empty series")
    mean = float(np.mean(x))

    length = max(1, int(block_length))
    if n // length < min_blocks:
        shrunk = max(1, n // min_blocks)
        logger.debug("block length %d -> %d to keep %d blocks in %d samples", length, shrunk, min_blocks, n)
        length = shrunk
    n_blocks = n // length
    if n_blocks < 2:
        return BlockEstimate(mean, 0.0, n_blocks, length)

    block_means = x[: n_blocks * length].reshape(n_blocks, length).mean(axis=1)
    se = float(np.std(block_means, ddof=1) / math.sqrt(n_blocks))
    return BlockEstimate(mean, se, n_blocks, length)


def trimmed_estimate(series: np.ndarray, config: SimConfig) -> PowerFlowEstimate:
    """Discard the burn-in prefix, then block-average the rest."""
    burn_in = config.burn_in_samples
    kept = np.asarray(series)[burn_in:]
    est = block_standard_error(kept, block_length_for(config), config.min_blocks)
    return PowerFlowEstimate(
        mean=est.mean,
        standard_error=est.standard_error,
        n_blocks=est.n_blocks,
        block_length=est.block_length,
        burn_in_discarded=burn_in,
    )

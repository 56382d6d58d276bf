"""Band-limited Gaussian noise synthesis and spectral estimation.

Conventions: every PSD in this package is one-sided, per unit frequency, so a
flat level S over [f_L, f_H] carries variance S * (f_H - f_L). Synthesis works
in the frequency domain: independent complex Gaussian coefficients on the
in-band rfft bins, zero elsewhere, inverse transform. The in-band spectrum is
therefore flat in expectation with no filter ripple or transition band.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import signal

from ..errors import ArgumentError
from ..models import NoiseRecord, NoiseRole, PsdEstimate, RecordStatistics, SimConfig
from .stats import CORRELATION_SPANS, block_standard_error

_ROLE_KEYS = {NoiseRole.VOLTAGE: 0, NoiseRole.CURRENT: 1}


def substream(seed: int, stream: int, role: NoiseRole = NoiseRole.VOLTAGE) -> np.random.Generator:
    """PCG64 generator for one noise source.

    Substreams are keyed by ``(stream, role)`` under the root seed, so adding
    a source never shifts the draws of an existing one.
    """
    seq = np.random.SeedSequence(seed, spawn_key=(stream, _ROLE_KEYS[role]))
    return np.random.Generator(np.random.PCG64(seq))


def synthesize_bandlimited_gaussian(
    config: SimConfig,
    psd_level: float,
    role: NoiseRole = NoiseRole.VOLTAGE,
    *,
    stream: int = 0,
) -> NoiseRecord:
    """Gaussian record whose one-sided PSD is ``psd_level`` in-band and 0 outside."""
    config.check()
    if psd_level < 0 or not math.isfinite(psd_level):
        raise ArgumentError(f"psd_level must be finite and >= 0, got {psd_level}")

    n = config.n_samples
    if psd_level == 0.0:
        samples = np.zeros(n)
    else:
        freqs = np.fft.rfftfreq(n, d=config.dt)
        in_band = (freqs >= config.band_low) & (freqs <= config.band_high)
        bins = np.flatnonzero(in_band)
        draws = substream(config.seed, stream, role).standard_normal((2, bins.size))

        # E|X_k|^2 = S * fs * n / 2 for an interior bin of numpy's unnormalized
        # rfft gives per-bin variance S * df after irfft.
        spectrum = np.zeros(freqs.size, dtype=np.complex128)
        scale = math.sqrt(psd_level * config.sample_rate * n / 4.0)
        spectrum[bins] = scale * (draws[0] + 1j * draws[1])

        nyquist = n // 2
        if in_band[nyquist]:
            # The Nyquist coefficient must be real and is counted once.
            spectrum[nyquist] = math.sqrt(psd_level * config.sample_rate * n) * draws[0, -1]
        samples = np.fft.irfft(spectrum, n=n)

    return NoiseRecord(
        samples=samples,
        dt=config.dt,
        band=config.band,
        target_psd_level=psd_level,
        role=role,
        seed=config.seed,
        stream=stream,
    )


def oversample_record(record: NoiseRecord, factor: int) -> NoiseRecord:
    """Band-limited (FFT) interpolation of ``record`` to ``factor`` times its rate."""
    if factor < 1:
        raise ArgumentError(f"oversampling factor must be >= 1, got {factor}")
    if factor == 1:
        return record
    samples = signal.resample(record.samples, record.n_samples * factor)
    return NoiseRecord(
        samples=samples,
        dt=record.dt / factor,
        band=record.band,
        target_psd_level=record.target_psd_level,
        role=record.role,
        seed=record.seed,
        stream=record.stream,
    )


def estimate_psd(record: NoiseRecord, n_segments: int = 64, window: str = "hann") -> PsdEstimate:
    """Averaged, non-overlapping windowed periodogram (one-sided density).

    Density scaling divides by fs * sum(w^2), so a flat input level is
    recovered without bias whatever the window.
    """
    if n_segments < 1:
        raise ArgumentError(f"n_segments must be >= 1, got {n_segments}")
    n = record.n_samples
    segment = n // n_segments
    if segment < 2 or n % n_segments or segment & (segment - 1):
        raise ArgumentError(
            f"record of {n} samples cannot be split into {n_segments} "
            "power-of-two segments",
            {"n_samples": n, "n_segments": n_segments},
        )
    try:
        freqs, psd = signal.welch(
            record.samples,
            fs=record.sample_rate,
            window=window,
            nperseg=segment,
            noverlap=0,
            detrend=False,
            return_onesided=True,
            scaling="density",
        )
    except ValueError as e:
        raise ArgumentError(f"unusable window {window!r}: {e}") from e

    return PsdEstimate(
        frequency_bins=freqs,
        psd_values=np.maximum(psd, 0.0),
        segment_count=n_segments,
        window_name=window,
    )


def _band_masks(estimate: PsdEstimate, band: tuple[float, float], edge_bins: int):
    f = estimate.frequency_bins
    margin = edge_bins * estimate.resolution
    inside = (f >= band[0] + margin) & (f <= band[1] - margin)
    outside = (f < band[0] - margin) | (f > band[1] + margin)
    return inside, outside


def in_band_level(estimate: PsdEstimate, band: tuple[float, float], edge_bins: int = 1) -> float:
    """Mean PSD over the band, skipping ``edge_bins`` transition bins at each edge."""
    inside, _ = _band_masks(estimate, band, edge_bins)
    if not inside.any():
        raise ArgumentError("no PSD bins fall inside the band; use fewer segments")
    return float(np.mean(estimate.psd_values[inside]))


def out_of_band_peak(estimate: PsdEstimate, band: tuple[float, float], edge_bins: int = 1) -> float:
    _, outside = _band_masks(estimate, band, edge_bins)
    if not outside.any():
        return 0.0
    return float(np.max(estimate.psd_values[outside]))


def record_statistics(record: NoiseRecord) -> RecordStatistics:
    """Mean, unbiased variance and block-means standard error of the mean."""
    x = record.samples
    if x.size == 0:
        raise ArgumentError("record is empty")
    variance = float(np.var(x, ddof=1)) if x.size > 1 else 0.0
    block = max(1, math.ceil(CORRELATION_SPANS * record.sample_rate / record.band[0]))
    est = block_standard_error(x, block)
    return RecordStatistics(est.mean, variance, est.standard_error)

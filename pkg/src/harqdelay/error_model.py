"""Finite-blocklength packet error rates over Rayleigh block fading.

The normal approximation gives the error probability of one attempt at
instantaneous SNR ``S`` as ``Q((log2(1+S) - eta) * sqrt(n/V))``.  Joint
decoding of ``m`` HARQ-IR attempts sees the average capacity of the ``m``
fades, a rate of ``eta/m`` and a blocklength of ``m`` slots worth of symbols.
Fading averages are estimated by seeded Monte Carlo over exponential SNR
draws; estimates are bit-reproducible for a fixed seed (counter-based Philox
generator, inverse-CDF sampling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

DEFAULT_SAMPLES = 1_000_000

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ChannelParams:
    """Rayleigh block-fading channel: S = (gamma / mu_h2) * |h|^2, E[S] = gamma."""

    gamma: float  # average SNR, linear scale
    mu_h2: float = 1.0  # E[|h|^2]
    dispersion: float = 1.0  # channel dispersion V

    def __post_init__(self):
        if self.gamma <= 0 or self.mu_h2 <= 0 or self.dispersion <= 0:
            raise ValueError(
                f"gamma, mu_h2 and dispersion must be positive, got "
                f"({self.gamma}, {self.mu_h2}, {self.dispersion})"
            )

    @classmethod
    def from_snr_db(cls, snr_db: float, mu_h2: float = 1.0, dispersion: float = 1.0):
        return cls(gamma=10.0 ** (snr_db / 10.0), mu_h2=mu_h2, dispersion=dispersion)


@dataclass(frozen=True)
class PerEstimate:
    """Monte Carlo PER estimate with its sampling provenance."""

    value: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0 or self.std_error < 0.0:
            raise ValueError(f"invalid estimate ({self.value}, {self.std_error})")


@dataclass(frozen=True)
class PerVector:
    """Per-attempt HARQ-IR error rates p_1 >= p_2 >= ... >= p_M."""

    p: tuple[PerEstimate, ...]

    def __post_init__(self):
        vals = [e.value for e in self.p]
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"PER vector must be nonincreasing, got {vals}")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(e.value for e in self.p)

    def __len__(self) -> int:
        return len(self.p)


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x). Accepts scalars or arrays."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def per_arq_instant(snr, eta: float, blocklength: float, dispersion: float = 1.0):
    """Single-attempt error probability at instantaneous SNR (normal approximation)."""
    arg = (np.log2(1.0 + np.asarray(snr, dtype=float)) - eta) * math.sqrt(
        blocklength / dispersion
    )
    return q_function(arg)


def per_harq_instant(
    snrs, eta: float, blocklength_per_slot: float, dispersion: float = 1.0
):
    """Error probability of the m-th HARQ-IR attempt given the m attempt SNRs.

    ``snrs`` holds the instantaneous SNRs of attempts 1..m; joint decoding sees
    their average capacity against rate ``eta/m`` over ``m`` slots of symbols.
    """
    s = np.asarray(snrs, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("snrs must be a non-empty 1-D sequence")
    m = s.size
    avg_cap = np.mean(np.log2(1.0 + s))
    arg = (avg_cap - eta / m) * math.sqrt(m * blocklength_per_slot / dispersion)
    return float(q_function(arg))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _exponential(rng: np.random.Generator, mean: float, shape) -> np.ndarray:
    # Inverse-CDF sampling keeps the draw monotone in the underlying uniform.
    return -mean * np.log1p(-rng.random(shape))


def per_arq_avg(
    ch: ChannelParams,
    eta: float,
    blocklength: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> PerEstimate:
    """Fading-averaged ARQ error rate by Monte Carlo over exponential SNR draws."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    snr = _exponential(_rng(seed), ch.gamma, samples)
    vals = per_arq_instant(snr, eta, blocklength, ch.dispersion)
    std_error = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return PerEstimate(float(vals.mean()), std_error, samples, seed)


def per_harq_avg(
    ch: ChannelParams,
    eta: float,
    blocklength_per_slot: float,
    max_attempts: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> PerVector:
    """Fading-averaged HARQ-IR error rates for attempts 1..max_attempts.

    All attempts share one ``samples x max_attempts`` draw: the m-th estimate
    uses the first m coordinates of each sample vector, which couples the
    estimates and keeps the vector monotone up to Monte Carlo noise.  Any
    residual noise violation is removed with a running minimum, since the
    downstream delay analysis presumes nonincreasing attempt failure rates.
    """
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    snr = _exponential(_rng(seed), ch.gamma, (samples, max_attempts))
    cum_cap = np.cumsum(np.log2(1.0 + snr), axis=1)
    estimates = []
    prev = 1.0
    for m in range(1, max_attempts + 1):
        arg = (cum_cap[:, m - 1] / m - eta / m) * math.sqrt(
            m * blocklength_per_slot / ch.dispersion
        )
        vals = q_function(arg)
        std_error = (
            float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        )
        value = min(float(vals.mean()), prev)
        estimates.append(PerEstimate(value, std_error, samples, seed))
        prev = value
    return PerVector(tuple(estimates))

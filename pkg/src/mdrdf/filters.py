"""Filter construction for the time-domain coding structures.

Builds the interleaved upsampled-rate noise spectrum, the FIR
noise-shaping filter C(z), the pre/post magnitude responses F and G, and
the half-band interpolator. All frequency responses are real and even in
omega (zero phase), so impulse responses are real.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import MaskExceedsSource, NegativeRadicand, TruncationWarning
from .rdf import NoiseSpectra
from .spectra import Spectrum, optimal_predictor

C_TRUNCATION_TOL = 1e-9
C_MAX_LEN = 8192


@dataclass(frozen=True)
class InterleavedSpectrum:
    """Upsampled-rate noise spectrum on a length-2N midpoint grid.

    The lowpass half carries the frequency-compressed symmetric noise
    (2 theta_plus), the highpass half the antisymmetric noise
    (2 theta_minus), oriented so that downsampling by two folds both
    halves onto the source grid without mirroring.
    """

    values: NDArray[np.float64]

    @property
    def spectrum(self) -> Spectrum:
        return Spectrum(self.values)


@dataclass(frozen=True)
class ShapingFilter:
    """Strictly causal FIR noise shaper C(z) = c_1 z^-1 + ... + c_L z^-L.

    innovation_variance is the white-noise power that, colored by
    |1 + C|^2, reproduces the target mask up to truncation error.
    """

    coeffs: NDArray[np.float64]
    innovation_variance: float

    @property
    def order(self) -> int:
        return self.coeffs.size

    def one_plus_c(self, omega: NDArray[np.float64]) -> NDArray[np.complex128]:
        """Frequency response 1 + C(e^{j omega})."""
        resp = np.ones_like(omega, dtype=complex)
        for k, c in enumerate(self.coeffs, start=1):
            resp += c * np.exp(-1j * k * omega)
        return resp


@dataclass(frozen=True)
class PrePostFilters:
    """Zero-phase magnitude responses of the pre filter F and post filter G."""

    f_mag: NDArray[np.float64]
    g_mag: NDArray[np.float64]


def interleave_theta(noise: NoiseSpectra) -> InterleavedSpectrum:
    """Interleave (theta_plus, theta_minus) into the upsampled-rate mask.

    On the length-2N midpoint grid the first N bins are 2 theta_plus in
    order and the last N bins are 2 theta_minus reversed; both halves then
    alias back onto the source grid bin-for-bin after downsampling by two.
    """
    tp = np.asarray(noise.theta_plus, dtype=np.float64)
    tm = np.asarray(noise.theta_minus, dtype=np.float64)
    return InterleavedSpectrum(np.concatenate([2.0 * tp, 2.0 * tm[::-1]]))


def noise_shaper(
    mask: Spectrum,
    order: int,
    max_len: int = C_MAX_LEN,
    tol: float = C_TRUNCATION_TOL,
) -> ShapingFilter:
    """FIR realization of C(z) = Q(z) / (1 - Q(z)) for the mask predictor Q.

    Q is the order-`order` optimal predictor of the mask; the rational
    filter is expanded by long division and truncated once eight
    consecutive coefficients fall below `tol` in magnitude. Warns with
    TruncationWarning when the cutoff at max_len leaves visible tail
    energy.
    """
    pred = optimal_predictor(mask, order)
    q = pred.coeffs
    if not np.any(np.abs(q) > 1e-14):
        return ShapingFilter(np.zeros(0), pred.innovation_variance)
    L = q.size
    c = np.zeros(max_len)
    below = 0
    n_end = max_len
    for n in range(1, max_len + 1):
        v = q[n - 1] if n <= L else 0.0
        kmax = min(n - 1, L)
        if kmax:
            v += np.dot(q[:kmax], c[n - 1 - kmax : n - 1][::-1])
        c[n - 1] = v
        below = below + 1 if abs(v) < tol else 0
        if below >= 8 and n > L:
            n_end = n
            break
    coeffs = c[:n_end]
    total = float(np.sum(coeffs**2))
    tail = float(np.sum(coeffs[-8:] ** 2))
    if n_end == max_len and total > 0 and tail > 1e-6 * total:
        warnings.warn(
            f"shaping filter truncated at {max_len} taps with tail energy "
            f"{tail / total:.2e} of total",
            TruncationWarning,
        )
    return ShapingFilter(coeffs, pred.innovation_variance)


def pre_post_filters(source: Spectrum, noise: NoiseSpectra) -> PrePostFilters:
    """|F|^2 = (S - tp - tm)/S and |G|^2 = S (S - tp - tm)/(S - tm)^2."""
    S = source.values
    resid = S - noise.theta_plus - noise.theta_minus
    if np.any(resid < -1e-12 * np.maximum(S, 1.0)):
        raise NegativeRadicand("theta_plus + theta_minus exceeds the source spectrum")
    resid = np.maximum(resid, 0.0)
    f_mag = np.sqrt(resid / S)
    g_mag = np.sqrt(S * resid) / (S - noise.theta_minus)
    return PrePostFilters(f_mag=f_mag, g_mag=g_mag)


def sd_prefilter(source: Spectrum, mask: Spectrum) -> NDArray[np.float64]:
    """Single-description pre-filter magnitude |F| = sqrt((S - D)/S)."""
    S, D = source.values, mask.values
    if np.any(D > S * (1.0 + 1e-12)):
        raise MaskExceedsSource("distortion mask exceeds the source spectrum")
    return np.sqrt(np.maximum(S - D, 0.0) / S)


def halfband_interpolator(taps: int = 511, beta: float = 8.6) -> NDArray[np.float64]:
    """Kaiser-windowed sinc half-band lowpass, cutoff pi/2, unity DC gain.

    Every second tap except the center is exactly zero; stopband
    attenuation exceeds 60 dB for the default design. Interpolation by two
    uses 2*h after zero stuffing to preserve amplitude.
    """
    if taps < 63 or taps % 2 == 0:
        raise ValueError("taps must be odd and >= 63")
    m = (taps - 1) // 2
    n = np.arange(taps) - m
    h = 0.5 * np.sinc(n / 2.0)
    h *= np.kaiser(taps, beta)
    return h / h.sum()

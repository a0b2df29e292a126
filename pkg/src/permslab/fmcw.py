"""Synthetic FMCW intermediate-frequency traces and their range spectra.

Models the post-mixer complex IF signal of a linear chirp radar for a
set of point echoes, transforms it with the plain unnormalized forward
DFT, picks the dominant range bin, and forms calibrated reflection
coefficients by ratioing against a metal-plate reference whose
reflection is exactly -1.

The IF samples follow the closed-form complex model

    S[n] = (A0^2 / 2) * Gamma * L_path * e^{j 2 pi ((B/Tc) tau n dt + f0 tau)}

so waveform-level chirp mixing is never simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .em import (
    SPEED_OF_LIGHT,
    ComplexPermittivity,
    SlabGeometry,
    complex_sqrt_lossy,
    slab_bounce_terms,
)
from .errors import AllZeroSpectrumError, CalibrationError


@dataclass(frozen=True)
class ChirpConfig:
    """Linear-chirp parameters of one transmitted ramp.

    Attributes:
        start_frequency: chirp start frequency f0 in Hz.
        bandwidth: swept bandwidth B in Hz.
        chirp_duration: ramp length Tc in s.
        sample_count: number of IF samples N per ramp.
        sample_interval: ADC sampling interval dt in s.
        amplitude: transmit amplitude A0, arbitrary linear units.
        path_loss: complex one-way path factor L_path (both directions
            folded in), assumed constant over a stepped sweep.
    """

    start_frequency: float
    bandwidth: float
    chirp_duration: float
    sample_count: int
    sample_interval: float
    amplitude: float = 1.0
    path_loss: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValueError(f"need at least 2 samples, got {self.sample_count}")
        if not self.sample_interval > 0.0:
            raise ValueError("sample interval must be > 0")
        if self.sample_count * self.sample_interval > self.chirp_duration * (1 + 1e-12):
            raise ValueError("samples do not fit inside one chirp (N*dt > Tc)")
        if not (self.bandwidth > 0.0 and self.start_frequency > 0.0):
            raise ValueError("bandwidth and start frequency must be > 0")

    @property
    def slope(self) -> float:
        """Chirp rate B / Tc in Hz/s."""
        return self.bandwidth / self.chirp_duration


@dataclass(frozen=True)
class EchoComponent:
    """One point echo: complex reflection weight and round-trip delay."""

    reflection: complex
    delay: float

    def __post_init__(self):
        if self.delay < 0.0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class IfTrace:
    """Complex IF samples of one ramp."""

    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))


@dataclass(frozen=True)
class RangeSpectrum:
    """Unnormalized forward-DFT bins of one IF trace."""

    bins: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bins", np.asarray(self.bins, dtype=complex))


def synth_if_trace(cfg: ChirpConfig, echoes: list[EchoComponent]) -> IfTrace:
    """Superpose the closed-form IF tones of all echoes.

    Linear in the echo list: the trace of a concatenated echo list is
    the sum of the individual traces.
    """
    if not echoes:
        raise ValueError("at least one echo is required")
    n = np.arange(cfg.sample_count)
    samples = np.zeros(cfg.sample_count, dtype=complex)
    scale = 0.5 * cfg.amplitude**2 * cfg.path_loss
    for echo in echoes:
        phase = 2.0 * math.pi * (
            cfg.slope * echo.delay * n * cfg.sample_interval
            + cfg.start_frequency * echo.delay
        )
        samples += scale * echo.reflection * np.exp(1j * phase)
    return IfTrace(samples)


def synth_slab_echoes(
    eps_r: ComplexPermittivity,
    geom: SlabGeometry,
    cfg: ChirpConfig,
    q: int,
) -> list[EchoComponent]:
    """Echo list of a backed slab: front-face bounce plus q-1 internal ones.

    Echo 1 is the air-to-slab Fresnel reflection at delay 2*l/c. Echo
    i >= 2 carries the i-th transmitted bounce amplitude

        T_r1*Gamma_r2*T_1r*e^{-j2k_r d} * (Gamma_r1*Gamma_r2*e^{-j2k_r d})^{i-2}

    evaluated at the chirp start frequency, delayed by one extra in-slab
    round trip 2*d*Re(sqrt(eps_r))/c per bounce.
    """
    if q < 1:
        raise ValueError(f"bounce count q must be >= 1, got {q}")
    g1r, gr2, rt = slab_bounce_terms(eps_r, geom, cfg.start_frequency)
    gr1 = -g1r
    t1r = 1.0 + g1r
    tr1 = 1.0 + gr1
    tau1 = 2.0 * geom.standoff / SPEED_OF_LIGHT
    slab_round_trip = (
        2.0 * geom.thickness * complex_sqrt_lossy(eps_r).real / SPEED_OF_LIGHT
    )
    echoes = [EchoComponent(g1r, tau1)]
    amp = tr1 * gr2 * t1r * rt
    for i in range(2, q + 1):
        echoes.append(EchoComponent(amp, tau1 + (i - 1) * slab_round_trip))
        amp *= gr1 * gr2 * rt
    return echoes


def dft(trace: IfTrace) -> RangeSpectrum:
    """Plain forward DFT, bins[k] = sum_n samples[n] e^{-j 2 pi n k / N}."""
    return RangeSpectrum(np.fft.fft(trace.samples))


def peak_bin(spec: RangeSpectrum) -> int:
    """Index of the maximum-magnitude bin; ties go to the lower index.

    Raises:
        AllZeroSpectrumError: if every bin is exactly zero.
    """
    mags = np.abs(spec.bins)
    if not np.any(mags > 0.0):
        raise AllZeroSpectrumError("spectrum has no nonzero bin")
    return int(np.argmax(mags))


def calibrate_ratio(
    mut_peak: complex, metal_peak: complex, reference_scale: float | None = None
) -> complex:
    """Measured reflection coefficient from MUT and metal peak values.

    Returns -(mut_peak / metal_peak): the metal's known reflection of -1
    is folded in, so the output is the calibrated reflection coefficient
    with amplitude and path-loss factors removed.

    Args:
        reference_scale: norm of the metal trace/spectrum used to judge
            whether the metal peak is meaningful. When given, a peak
            below 1e-15 of it raises; otherwise only an exact zero does.

    Raises:
        CalibrationError: metal peak too small to divide by.
    """
    threshold = 1e-15 * reference_scale if reference_scale is not None else 0.0
    if abs(metal_peak) <= threshold:
        raise CalibrationError(f"metal reference peak too small: {metal_peak!r}")
    return -(mut_peak / metal_peak)

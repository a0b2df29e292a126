"""Synthetic reflection sweeps with a measured-noise model.

Two generation routes are provided on purpose: ``generate_dataset``
builds the calibrated reflection sequence directly from the sweep
model, while ``generate_if_datasets`` synthesizes raw IF traces for the
material and for a stepped metal reference so the whole extraction
chain (DFT, peak pick, calibration ratio) can be exercised. At zero
noise the two routes agree to float precision when the chirp keeps the
range-window term constant over the sweep (see ``benchmark_chirp``).

Randomness comes from numpy's default PCG64 generator seeded per
NoiseModel, so identical seeds reproduce identical datasets on any
platform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .em import SPEED_OF_LIGHT, ComplexPermittivity, SlabGeometry, fraunhofer_distance
from .estimator import SdiDataset, model_gamma, step_phase_advance
from .fmcw import (
    ChirpConfig,
    EchoComponent,
    IfTrace,
    calibrate_ratio,
    dft,
    peak_bin,
    synth_if_trace,
    synth_slab_echoes,
)


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian amplitude/phase noise plus a linear amplitude drift.

    Defaults reproduce bench measurements of a 79 GHz module: relative
    amplitude scatter of 0.05%, phase scatter of 0.8 degrees, and a
    slow end-to-end amplitude drift of 1.22% across the sweep.

    Attributes:
        amplitude_rel_sigma: std of the multiplicative amplitude noise.
        phase_sigma: std of the additive phase noise, radians.
        amplitude_drift_rel: total linear drift across the sweep
            (positive values drift the calibrated amplitude upward,
            mirroring a reference whose return slowly weakens).
        seed: PCG64 seed; generation is reproducible from it.
    """

    amplitude_rel_sigma: float = 5e-4
    phase_sigma: float = math.radians(0.8)
    amplitude_drift_rel: float = 1.22e-2
    seed: int = 0

    def __post_init__(self):
        if self.amplitude_rel_sigma < 0 or self.phase_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")

    @classmethod
    def quiet(cls, seed: int = 0) -> "NoiseModel":
        """All noise terms zero; only the seed is kept."""
        return cls(0.0, 0.0, 0.0, seed)


def _drift_profile(drift_rel: float, count: int) -> np.ndarray:
    """Linear ramp 0 .. drift_rel over count points."""
    if count < 2:
        return np.zeros(count)
    return drift_rel * np.arange(count) / (count - 1)


def generate_dataset(
    truth: ComplexPermittivity,
    phase_offset: float,
    m_count: int,
    step: float,
    carrier: float,
    noise: NoiseModel,
) -> SdiDataset:
    """Noisy calibrated reflection sweep for a known permittivity.

    Gamma(m) = model(truth, phase_offset, m)
               * (1 + drift(m) + amp_noise(m)) * e^{j phase_noise(m)}
    """
    rng = np.random.default_rng(noise.seed)
    m = np.arange(m_count)
    c1 = step_phase_advance(carrier, step)
    clean = model_gamma(truth.real_part, truth.imag_part, phase_offset, m, c1)
    amp = (
        1.0
        + _drift_profile(noise.amplitude_drift_rel, m_count)
        + noise.amplitude_rel_sigma * rng.standard_normal(m_count)
    )
    phase = noise.phase_sigma * rng.standard_normal(m_count)
    return SdiDataset(clean * amp * np.exp(1j * phase), step, carrier)


def benchmark_chirp(
    carrier: float = 79e9,
    amplitude: float = 1.0,
    path_loss: complex = 1.0 + 0.0j,
) -> ChirpConfig:
    """Default chirp for synthetic sweep benchmarks.

    The bandwidth is deliberately narrow (10 kHz) so that the DFT
    range-window factor is the same for every stepped position to well
    below 1e-6; the stepped-calibration identity between the raw-IF
    route and the direct sweep model then holds to float precision.
    Wideband chirps add a slow phase drift of order B/(2 f0) per step
    (the start-to-phase-center frequency correction), which is a
    modeled physical effect, not part of the identity being checked.
    """
    return ChirpConfig(
        start_frequency=carrier,
        bandwidth=1e4,
        chirp_duration=200e-6,
        sample_count=64,
        sample_interval=2e-6,
        amplitude=amplitude,
        path_loss=path_loss,
    )


def generate_if_datasets(
    truth: ComplexPermittivity,
    geom: SlabGeometry,
    cfg: ChirpConfig,
    m_count: int,
    step: float,
    noise: NoiseModel,
    bounce_count: int = 1,
    antenna_aperture: float | None = None,
) -> tuple[IfTrace, list[IfTrace]]:
    """Raw IF traces of the fixed material and the stepped metal reference.

    The material is synthesized once at the geometry's standoff; the
    metal reference (reflection exactly -1) is synthesized at standoff,
    standoff + step, ..., standoff + (m_count-1)*step. Per-trace noise
    multiplies each trace by (1 + amp_noise) e^{j phase_noise}; the
    metal traces additionally lose amplitude linearly along the sweep
    (drift), mimicking a slowly weakening reference return.

    Args:
        bounce_count: internal slab bounces for the material trace; 1
            keeps only the front-face echo (thick-slab condition).
        antenna_aperture: when given, warn if the standoff is inside the
            far-field distance for the chirp start frequency.
    """
    if antenna_aperture is not None:
        wavelength = SPEED_OF_LIGHT / cfg.start_frequency
        d_far = fraunhofer_distance(antenna_aperture, wavelength)
        if geom.standoff < d_far:
            warnings.warn(
                f"standoff {geom.standoff:.3f} m is inside the far-field "
                f"distance {d_far:.3f} m; plane-wave treatment is doubtful",
                stacklevel=2,
            )
    rng = np.random.default_rng(noise.seed)

    def trace_noise() -> complex:
        amp = 1.0 + noise.amplitude_rel_sigma * rng.standard_normal()
        return amp * np.exp(1j * noise.phase_sigma * rng.standard_normal())

    mut_echoes = synth_slab_echoes(truth, geom, cfg, bounce_count)
    mut_trace = synth_if_trace(cfg, mut_echoes)
    mut_trace = IfTrace(mut_trace.samples * trace_noise())

    drift = _drift_profile(noise.amplitude_drift_rel, m_count)
    metal_traces = []
    for m in range(m_count):
        tau = 2.0 * (geom.standoff + m * step) / SPEED_OF_LIGHT
        trace = synth_if_trace(cfg, [EchoComponent(-1.0 + 0.0j, tau)])
        metal_traces.append(IfTrace(trace.samples * (1.0 - drift[m]) * trace_noise()))
    return mut_trace, metal_traces


def extract_sweep(
    mut_trace: IfTrace,
    metal_traces: list[IfTrace],
    step: float,
    carrier: float,
) -> SdiDataset:
    """Run the extraction chain on raw traces and assemble a sweep.

    Per metal position: DFT both traces, read the material spectrum at
    its own peak bin and the metal spectrum at its peak bin, and form
    the calibrated ratio.
    """
    mut_spec = dft(mut_trace)
    mut_peak = mut_spec.bins[peak_bin(mut_spec)]
    gammas = np.empty(len(metal_traces), dtype=complex)
    for m, trace in enumerate(metal_traces):
        spec = dft(trace)
        k = peak_bin(spec)
        scale = float(np.linalg.norm(spec.bins))
        gammas[m] = calibrate_ratio(mut_peak, spec.bins[k], reference_scale=scale)
    return SdiDataset(gammas, step, carrier)

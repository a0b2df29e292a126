"""Plane-wave electromagnetics of a dielectric slab at normal incidence.

Covers the loss-branch complex square root, Fresnel coefficients, the
multi-bounce effective reflection coefficient of a backed slab (closed
form and truncated series), phase translation of a reflection
coefficient along the line of sight, and the Fraunhofer far-field
distance.

Conventions: relative permittivity eps = eps' - j*eps'' with eps' >= 1
and eps'' >= 0 (passive, non-magnetic media), time factor e^{+jwt}, so
waves propagate as e^{-jkx} with Im(k) <= 0 and decay in lossy media.
All quantities are SI (Hz, m, s).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DegenerateGeometryError

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact


@dataclass(frozen=True)
class ComplexPermittivity:
    """Relative permittivity eps' - j*eps'' of a passive dielectric.

    ``imag_part`` stores the positive loss magnitude eps'', i.e. the
    physical value is ``real_part - 1j * imag_part``.
    """

    real_part: float
    imag_part: float = 0.0

    def __post_init__(self):
        if not self.real_part >= 1.0:
            raise ValueError(f"real part must be >= 1, got {self.real_part}")
        if not self.imag_part >= 0.0:
            raise ValueError(f"loss part must be >= 0, got {self.imag_part}")

    def as_complex(self) -> complex:
        return complex(self.real_part, -self.imag_part)


AIR = ComplexPermittivity(1.0, 0.0)


class MetalBacking:
    """Marker for an ideal conductor behind the slab (reflection -1)."""

    def __repr__(self):
        return "METAL"


METAL = MetalBacking()


@dataclass(frozen=True)
class SlabGeometry:
    """Slab thickness, radar standoff to the front face, and backing medium.

    ``backing`` is either a ComplexPermittivity or the METAL marker,
    which forces the rear-interface reflection to exactly -1.
    """

    thickness: float
    standoff: float
    backing: ComplexPermittivity | MetalBacking = METAL

    def __post_init__(self):
        if not self.thickness > 0.0:
            raise ValueError(f"thickness must be > 0, got {self.thickness}")
        if not self.standoff > 0.0:
            raise ValueError(f"standoff must be > 0, got {self.standoff}")


@dataclass(frozen=True)
class WaveParams:
    """A single-frequency plane wave in a given medium."""

    frequency: float
    medium_permittivity: ComplexPermittivity = AIR

    def __post_init__(self):
        if not self.frequency > 0.0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")

    @property
    def wavenumber(self) -> complex:
        """k = (2*pi*f/c) * sqrt(eps), decaying branch (Im(k) <= 0)."""
        return (2.0 * math.pi * self.frequency / SPEED_OF_LIGHT) * complex_sqrt_lossy(
            self.medium_permittivity
        )


def complex_sqrt_lossy(eps: ComplexPermittivity) -> complex:
    """Square root of a - jb on the decaying-wave branch.

    Returns (sqrt(2)/2) * (sqrt(sqrt(a^2+b^2) + a) - j*sqrt(sqrt(a^2+b^2) - a)),
    the root with non-negative real part and non-positive imaginary part.
    The imaginary part is evaluated through mag - a = b^2 / (mag + a),
    which avoids the cancellation the literal form suffers for b << a.
    """
    a = eps.real_part
    b = eps.imag_part
    mag = math.hypot(a, b)
    p = math.sqrt((mag + a) / 2.0)
    q = b / math.sqrt(2.0 * (mag + a))
    return complex(p, -q)


def fresnel_normal(
    eps_from: ComplexPermittivity, eps_to: ComplexPermittivity
) -> tuple[complex, complex]:
    """Normal-incidence Fresnel coefficients for a single interface.

    Gamma = (sqrt(eps_from) - sqrt(eps_to)) / (sqrt(eps_from) + sqrt(eps_to))
    T     = 2*sqrt(eps_from) / (sqrt(eps_from) + sqrt(eps_to))

    Returns:
        (reflection, transmission); T = 1 + Gamma holds identically.
    """
    n_from = complex_sqrt_lossy(eps_from)
    n_to = complex_sqrt_lossy(eps_to)
    denom = n_from + n_to
    return (n_from - n_to) / denom, 2.0 * n_from / denom


def slab_bounce_terms(
    eps_r: ComplexPermittivity, geom: SlabGeometry, freq: float
) -> tuple[complex, complex, complex]:
    """Shared front-face Fresnel terms and the one-round-trip slab factor.

    Returns (gamma_front, rear_reflection, round_trip) where round_trip
    is e^{-j 2 k_r d} for the in-slab wavenumber k_r.
    """
    gamma_front, _ = fresnel_normal(AIR, eps_r)
    if isinstance(geom.backing, MetalBacking):
        gamma_rear = -1.0 + 0.0j
    else:
        gamma_rear, _ = fresnel_normal(eps_r, geom.backing)
    k_r = WaveParams(freq, eps_r).wavenumber
    round_trip = cmath.exp(-2j * k_r * geom.thickness)
    return gamma_front, gamma_rear, round_trip


def effective_reflection(
    eps_r: ComplexPermittivity, geom: SlabGeometry, freq: float
) -> complex:
    """Total front-face reflection of a backed slab, all bounces summed.

    Closed form of the internal-bounce geometric series:

        Gamma_1r + T_r1*Gamma_r2*T_1r*e^{-j2k_r d}
                   / (1 - Gamma_r1*Gamma_r2*e^{-j2k_r d})

    Raises:
        DegenerateGeometryError: if the series denominator is within
            1e-12 of zero (lossless mirror resonance, nonphysical).
    """
    g1r, gr2, rt = slab_bounce_terms(eps_r, geom, freq)
    gr1 = -g1r
    t1r = 1.0 + g1r
    tr1 = 1.0 + gr1
    ratio = gr1 * gr2 * rt
    denom = 1.0 - ratio
    if abs(denom) < 1e-12:
        raise DegenerateGeometryError(
            "internal bounce series does not converge (|1 - ratio| < 1e-12)"
        )
    return g1r + tr1 * gr2 * t1r * rt / denom


def effective_reflection_truncated(
    eps_r: ComplexPermittivity, geom: SlabGeometry, freq: float, q: int
) -> complex:
    """Front-face reflection keeping only the first q wave components.

    Component 1 is the direct front-face reflection; components
    2..q are the successive transmitted bounces, summed term by term.
    Serves as the independent oracle for effective_reflection.
    """
    if q < 2:
        raise ValueError(f"bounce count q must be >= 2, got {q}")
    g1r, gr2, rt = slab_bounce_terms(eps_r, geom, freq)
    gr1 = -g1r
    t1r = 1.0 + g1r
    tr1 = 1.0 + gr1
    ratio = gr1 * gr2 * rt
    total = g1r
    term = tr1 * gr2 * t1r * rt
    for _ in range(q - 1):
        total += term
        term *= ratio
    return total


def translate_reflection(gamma_at_face: complex, standoff: float, freq: float) -> complex:
    """Refer a front-face reflection coefficient back to the radar.

    Multiplies by e^{+j 2 k1 l} for an air path of length ``standoff``;
    the magnitude is preserved exactly.
    """
    if standoff < 0.0:
        raise ValueError(f"standoff must be >= 0, got {standoff}")
    k1 = 2.0 * math.pi * freq / SPEED_OF_LIGHT
    return gamma_at_face * cmath.exp(2j * k1 * standoff)


def fraunhofer_distance(aperture: float, wavelength: float) -> float:
    """Far-field boundary 2*D^2/lambda for an aperture of size D."""
    if not (aperture > 0.0 and wavelength > 0.0):
        raise ValueError("aperture and wavelength must be > 0")
    return 2.0 * aperture * aperture / wavelength

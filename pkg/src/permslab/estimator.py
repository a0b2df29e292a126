"""Permittivity fitting from stepped-distance reflection sweeps.

A sweep records calibrated complex reflection coefficients Gamma(m),
m = 0..M-1, taken while the reference distance grows by a small step dl
per measurement. The model is

    Gamma(m) = (1 - sqrt(a - jb)) / (1 + sqrt(a - jb)) * e^{j(c - C1 m)}

with C1 = 2*pi*f0*2*dl/c the known per-step round-trip phase advance,
and unknowns a (eps'), b (eps''), and c, a single phase offset that
absorbs the reference-position mismatch. The fit minimizes the summed
squared real and imaginary residuals under box bounds a >= 1, b >= 0.

Identifiability: the model depends on (a, b, c) only through the
product r(a, b) * e^{jc}, so any single-frequency sweep pins exactly two
real degrees of freedom and the exact-fit solutions form a
one-parameter family. The solver converges to the family member nearest
its starting point; pass explicit ``starts`` to anchor the answer to
prior knowledge. See fit_permittivity for details.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .em import (
    SPEED_OF_LIGHT,
    ComplexPermittivity,
    SlabGeometry,
    complex_sqrt_lossy,
    effective_reflection,
)
from .errors import AliasingError, DegenerateDataError, DegenerateRegressionError, NoConvergenceError
from .trf import least_squares_trf, numerical_jacobian

AUTO_START_A = (1.5, 3.0, 6.0, 12.0)
AUTO_START_B = (0.01, 0.5)


def wrap_phase(c: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (c + math.pi) % (2.0 * math.pi) - math.pi


def step_phase_advance(carrier: float, step: float) -> float:
    """Per-step phase constant C1 = 2*pi*f0 * 2*dl / c, in radians."""
    return 2.0 * math.pi * carrier * 2.0 * step / SPEED_OF_LIGHT


@dataclass(frozen=True)
class SdiDataset:
    """Calibrated reflection sweep: Gamma(m), step size and carrier.

    Attributes:
        gammas: M complex reflection coefficients, m = 0..M-1.
        step: distance increment dl per measurement, meters.
        carrier: frequency f0 used in the per-step phase factor, Hz.
    """

    gammas: np.ndarray
    step: float
    carrier: float

    def __post_init__(self):
        object.__setattr__(self, "gammas", np.asarray(self.gammas, dtype=complex))
        if self.gammas.ndim != 1 or self.gammas.size < 3:
            raise ValueError("need at least 3 reflection samples")
        if not self.step > 0.0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if not self.carrier > 0.0:
            raise ValueError(f"carrier must be > 0, got {self.carrier}")
        if self.step_phase >= math.pi:
            raise AliasingError(
                f"per-step phase advance {self.step_phase:.3f} rad >= pi; "
                "reduce the step below a quarter wavelength"
            )

    @property
    def step_count(self) -> int:
        return int(self.gammas.size)

    @property
    def step_phase(self) -> float:
        return step_phase_advance(self.carrier, self.step)


@dataclass(frozen=True)
class FitBounds:
    """Box bounds of the fit: a in [1, a_max], b in [0, b_max].

    The phase offset is fitted unbounded and wrapped to [-pi, pi) on
    report, so no bound is stored for it.
    """

    a_max: float = 100.0
    b_max: float = 50.0

    def __post_init__(self):
        if not self.a_max > 1.0:
            raise ValueError("a_max must be > 1")
        if not self.b_max > 0.0:
            raise ValueError("b_max must be > 0")


@dataclass(frozen=True)
class FitResult:
    """Fitted permittivity, phase offset and convergence diagnostics.

    ``residual_norm`` is the 2-norm of the stacked Re/Im residual
    vector; its square is the minimized objective. ``covariance_proxy``
    holds the Gauss-Newton curvature J^T J at the solution in (a, b, c)
    order; a vanishing eigenvalue flags the phase-offset gauge direction
    along which the data do not constrain the parameters.
    """

    permittivity: ComplexPermittivity
    phase_offset: float
    residual_norm: float
    iterations: int
    converged: bool
    covariance_proxy: np.ndarray | None = field(default=None, repr=False)


def front_face_reflection(a: float, b: float) -> complex:
    """Air-to-material reflection (1 - sqrt(a - jb)) / (1 + sqrt(a - jb))."""
    s = complex_sqrt_lossy(ComplexPermittivity(a, b))
    return (1.0 - s) / (1.0 + s)


def model_gamma(a: float, b: float, c: float, m, c1: float):
    """Model reflection coefficient at step index m (scalar or array)."""
    theta = c - c1 * np.asarray(m, dtype=float)
    return front_face_reflection(a, b) * np.exp(1j * theta)


def residuals(params, data: SdiDataset) -> np.ndarray:
    """Interleaved [Re, Im] residuals (measured - model), length 2M."""
    a, b, c = params
    model = model_gamma(a, b, c, np.arange(data.step_count), data.step_phase)
    diff = data.gammas - model
    out = np.empty(2 * data.step_count)
    out[0::2] = diff.real
    out[1::2] = diff.imag
    return out


def jacobian(params, data: SdiDataset) -> np.ndarray:
    """Analytic (2M, 3) Jacobian of the residual vector w.r.t. (a, b, c).

    Uses dr/da = -1 / (s (1+s)^2) and dr/db = j / (s (1+s)^2) for
    s = sqrt(a - jb); the phase-offset column is the 90-degree rotation
    of the model.
    """
    a, b, c = params
    s = complex_sqrt_lossy(ComplexPermittivity(a, b))
    r = (1.0 - s) / (1.0 + s)
    dr_da = -1.0 / (s * (1.0 + s) ** 2)
    dr_db = 1j / (s * (1.0 + s) ** 2)
    m = np.arange(data.step_count)
    phase = np.exp(1j * (c - data.step_phase * m))
    d_a = dr_da * phase
    d_b = dr_db * phase
    d_c = 1j * r * phase
    jac = np.empty((2 * data.step_count, 3))
    for col, deriv in enumerate((d_a, d_b, d_c)):
        jac[0::2, col] = -deriv.real
        jac[1::2, col] = -deriv.imag
    return jac


def _gauge_slide(r_base: complex, delta):
    """(a, b) of the family member whose phase offset grew by delta.

    The member's reflection coefficient is r_base * e^{-j delta}, so its
    model product r * e^{jc} stays equal to the landed one: every member
    reproduces the identical model sequence and the identical cost; only
    the (a, b, c) split changes.
    """
    r = r_base * np.exp(-1j * np.asarray(delta))
    s = (1.0 - r) / (1.0 + r)
    eps = s * s
    return eps.real, -eps.imag


def _canonicalize_gauge(a, b, c, anchor_ab, bounds: FitBounds):
    """Slide a fit along its cost-flat rotation family toward the anchor.

    Returns the feasible family member whose (a, b) is nearest the
    start's (a, b). This pins the one parameter combination the data do
    not constrain, making results deterministic, start-anchored, and
    equivariant under rotations of the dataset. The minimizer is located
    by bisection on the analytic distance derivative (or on the
    feasibility edge when the bounds cut the family short), so the
    member is resolved to full float precision.
    """
    a0, b0 = anchor_ab
    r_base = front_face_reflection(a, b)

    def feasible(delta: float) -> bool:
        aa, bb = _gauge_slide(r_base, delta)
        return bool(
            (aa >= 1.0) & (aa <= bounds.a_max) & (bb >= 0.0) & (bb <= bounds.b_max)
        )

    def dist2(delta: float) -> float:
        if not feasible(delta):
            return math.inf
        aa, bb = _gauge_slide(r_base, delta)
        return (float(aa) - a0) ** 2 + (float(bb) - b0) ** 2

    def slope(delta: float) -> float:
        r = r_base * np.exp(-1j * delta)
        s = (1.0 - r) / (1.0 + r)
        deps = 4j * s * r / (1.0 + r) ** 2  # d(eps)/d(delta) along the family
        aa, bb = _gauge_slide(r_base, delta)
        return 2.0 * ((float(aa) - a0) * deps.real + (float(bb) - b0) * (-deps.imag))

    deltas = np.linspace(-math.pi, math.pi, 1441)  # includes 0 exactly
    aa, bb = _gauge_slide(r_base, deltas)
    ok = (aa >= 1.0) & (aa <= bounds.a_max) & (bb >= 0.0) & (bb <= bounds.b_max)
    d2 = np.where(ok, (aa - a0) ** 2 + (bb - b0) ** 2, np.inf)
    i = int(np.argmin(d2))
    if not np.isfinite(d2[i]):
        return a, b, c

    cell = float(deltas[1] - deltas[0])
    lo = float(deltas[i]) - cell
    hi = float(deltas[i]) + cell
    candidates = [0.0]
    if feasible(lo) and feasible(hi) and slope(lo) < 0.0 < slope(hi):
        l, h = lo, hi
        for _ in range(100):
            mid = 0.5 * (l + h)
            if slope(mid) < 0.0:
                l = mid
            else:
                h = mid
        candidates.append(0.5 * (l + h))
    else:
        # minimum pressed against a bound: bisect each feasibility edge
        for sign in (-1.0, 1.0):
            out = float(deltas[i]) + sign * cell
            if not feasible(out):
                l, h = float(deltas[i]), out
                for _ in range(100):
                    mid = 0.5 * (l + h)
                    if feasible(mid):
                        l = mid
                    else:
                        h = mid
                candidates.append(l)

    delta = min(candidates, key=dist2)
    if not dist2(delta) < dist2(0.0):  # keep the landed point on a tie
        return a, b, c
    a_new, b_new = _gauge_slide(r_base, delta)
    a_new = min(max(float(a_new), 1.0), bounds.a_max)
    b_new = min(max(float(b_new), 0.0), bounds.b_max)
    return a_new, b_new, c + delta


def _auto_starts(data: SdiDataset) -> list[tuple[float, float, float]]:
    """Grid of (a, b) seeds with the phase offset matched to the data.

    Each seed's c aligns the model phase with the first measurement, so
    only the radial (magnitude) mismatch remains at the start.
    """
    phi0 = float(np.angle(data.gammas[0]))
    starts = []
    for a0 in AUTO_START_A:
        for b0 in AUTO_START_B:
            c0 = wrap_phase(phi0 - float(np.angle(front_face_reflection(a0, b0))))
            starts.append((a0, b0, c0))
    return starts


def _pick_winner(runs, gammas) -> int:
    """Lowest-residual start; numerical ties go to the earliest start.

    Exact-fit runs stop with residual norms anywhere between machine
    noise and the gradient tolerance, so residual norms within a small
    absolute band are treated as equal. This keeps the winning start
    reproducible when the objective has a flat direction.
    """
    norms = [math.sqrt(2.0 * r.cost) for r in runs]
    band = 1e-9 * (1.0 + float(np.linalg.norm(gammas)))
    best = min(norms)
    for i, rn in enumerate(norms):
        if rn <= best + band:
            return i
    return 0  # unreachable


def fit_permittivity(
    data: SdiDataset,
    bounds: FitBounds = FitBounds(),
    starts="auto",
    gtol: float = 1e-10,
    xtol: float = 1e-12,
    max_iter: int = 500,
) -> FitResult:
    """Fit (a, b, c) to a reflection sweep by bounded least squares.

    Runs the trust-region solver from every start and returns the
    lowest-residual result (numerical ties broken toward the earliest
    start). Because the sweep leaves one parameter combination
    unconstrained (see module docstring), the winning solution is then
    slid along its cost-flat rotation family to the feasible member
    nearest the winning start's (a, b); the reported point is therefore
    deterministic and anchored to the start. With ``starts="auto"`` the
    seeds are a fixed (a, b) grid with the phase offset aligned to the
    data; pass explicit ``starts=[(a, b, c), ...]`` to anchor the fit
    to prior values instead.

    Raises:
        DegenerateDataError: all reflection samples are ~0 (free space).
        NoConvergenceError: every start exhausted ``max_iter``.
    """
    if np.all(np.abs(data.gammas) < 1e-12):
        raise DegenerateDataError("all reflection samples below 1e-12")
    if isinstance(starts, str):
        if starts != "auto":
            raise ValueError(f"unknown start policy {starts!r}")
        start_list = _auto_starts(data)
    else:
        start_list = [tuple(map(float, s)) for s in starts]
        if not start_list:
            raise ValueError("empty start list")

    lb = np.array([1.0, 0.0, -np.inf])
    ub = np.array([bounds.a_max, bounds.b_max, np.inf])

    runs = []
    for s0 in start_list:
        runs.append(
            least_squares_trf(
                lambda x: residuals(x, data),
                lambda x: jacobian(x, data),
                np.asarray(s0, dtype=float),
                lb,
                ub,
                gtol=gtol,
                xtol=xtol,
                max_iter=max_iter,
            )
        )

    if not any(r.converged for r in runs):
        raise NoConvergenceError(f"no start converged within {max_iter} iterations")

    winner = _pick_winner(runs, data.gammas)
    win = runs[winner]
    # polish the winner at tightened tolerances so the data-constrained
    # parameter combination is pinned to machine precision before the
    # gauge canonicalization below
    polish = least_squares_trf(
        lambda x: residuals(x, data),
        lambda x: jacobian(x, data),
        win.x,
        lb,
        ub,
        gtol=min(gtol, 1e-14),
        xtol=min(xtol, 1e-15),
        max_iter=25,
    )
    iterations = win.iterations + polish.iterations
    x_best = polish.x if polish.cost <= win.cost else win.x
    a, b, c = (float(v) for v in x_best)
    a, b, c = _canonicalize_gauge(a, b, c, start_list[winner][:2], bounds)
    params = (a, b, c)
    jac_final = jacobian(params, data)
    return FitResult(
        permittivity=ComplexPermittivity(a, b),
        phase_offset=wrap_phase(c),
        residual_norm=float(np.linalg.norm(residuals(params, data))),
        iterations=iterations,
        converged=win.converged,
        covariance_proxy=jac_final.T @ jac_final,
    )


def fit_ideal(
    gammas_at_radar,
    geom: SlabGeometry,
    step: float,
    freq: float,
    bounds: FitBounds = FitBounds(),
    starts="auto",
    gtol: float = 1e-10,
    xtol: float = 1e-12,
    max_iter: int = 500,
) -> FitResult:
    """Fit (a, b) when the absolute standoff and slab geometry are known.

    Model: Gamma(m) = e^{j 2 k1 (l + m dl)} * Gamma_face(a, b) with the
    full multi-bounce slab reflection at the front face. No phase offset
    is fitted, which makes this variant identifiable but also makes it
    inherit every micrometer of standoff error as phase bias; it exists
    as the idealized baseline, not the practical path.

    Returns a FitResult with ``phase_offset`` fixed at 0; the last
    row/column of ``covariance_proxy`` is zero-padded accordingly.
    """
    gammas = np.asarray(gammas_at_radar, dtype=complex)
    if np.all(np.abs(gammas) < 1e-12):
        raise DegenerateDataError("all reflection samples below 1e-12")
    m = np.arange(gammas.size)
    k1 = 2.0 * math.pi * freq / SPEED_OF_LIGHT
    phase = np.exp(2j * k1 * (geom.standoff + m * step))

    def fun(x):
        face = effective_reflection(ComplexPermittivity(x[0], x[1]), geom, freq)
        diff = gammas - face * phase
        out = np.empty(2 * gammas.size)
        out[0::2] = diff.real
        out[1::2] = diff.imag
        return out

    lb = np.array([1.0, 0.0])
    ub = np.array([bounds.a_max, bounds.b_max])

    def jac(x):
        return numerical_jacobian(fun, x, lb, ub)

    if isinstance(starts, str):
        if starts != "auto":
            raise ValueError(f"unknown start policy {starts!r}")
        start_list = [(a0, b0) for a0 in AUTO_START_A for b0 in AUTO_START_B]
    else:
        start_list = [tuple(map(float, s)) for s in starts]
        if not start_list:
            raise ValueError("empty start list")

    runs = [
        least_squares_trf(fun, jac, np.asarray(s0, dtype=float), lb, ub,
                          gtol=gtol, xtol=xtol, max_iter=max_iter)
        for s0 in start_list
    ]
    if not any(r.converged for r in runs):
        raise NoConvergenceError(f"no start converged within {max_iter} iterations")

    win = runs[_pick_winner(runs, gammas)]
    curvature = np.zeros((3, 3))
    curvature[:2, :2] = win.jac.T @ win.jac
    return FitResult(
        permittivity=ComplexPermittivity(float(win.x[0]), float(win.x[1])),
        phase_offset=0.0,
        residual_norm=float(np.linalg.norm(win.residual)),
        iterations=win.iterations,
        converged=win.converged,
        covariance_proxy=curvature,
    )


def phase_slope_diagnostic(data: SdiDataset) -> tuple[float, float]:
    """Linearity check of the unwrapped sweep phase against displacement.

    Returns:
        (slope, r_squared): slope in degrees per millimeter of stage
        travel, and the coefficient of determination of the linear
        regression.

    Raises:
        DegenerateRegressionError: all phases identical (no progression).
    """
    phases = np.unwrap(np.angle(data.gammas))
    if np.all(phases == phases[0]):
        raise DegenerateRegressionError("constant phase, no slope to regress")
    x = np.arange(data.step_count) * data.step
    slope_rad_per_m, intercept = np.polyfit(x, phases, 1)
    predicted = slope_rad_per_m * x + intercept
    ss_res = float(np.sum((phases - predicted) ** 2))
    ss_tot = float(np.sum((phases - phases.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot
    slope_deg_per_mm = math.degrees(slope_rad_per_m) / 1000.0
    return slope_deg_per_mm, r_squared

"""Sweep model, residuals, Jacobian, and the fit drivers."""

import math

import numpy as np
import pytest

from permslab import (
    AIR,
    METAL,
    SPEED_OF_LIGHT,
    ComplexPermittivity,
    FitBounds,
    NoiseModel,
    SdiDataset,
    SlabGeometry,
    effective_reflection,
    fit_ideal,
    fit_permittivity,
    fresnel_normal,
    generate_dataset,
    jacobian,
    model_gamma,
    phase_slope_diagnostic,
    residuals,
    step_phase_advance,
    wrap_phase,
)
from permslab.errors import (
    AliasingError,
    DegenerateDataError,
    DegenerateRegressionError,
    NoConvergenceError,
)

C1_79GHZ = step_phase_advance(79e9, 1e-4)


def quiet_dataset(a, b, c, m_count=40, step=1e-4, carrier=79e9):
    return generate_dataset(
        ComplexPermittivity(a, b), c, m_count, step, carrier, NoiseModel.quiet()
    )


def real_form_model(a, b, c, m, c1):
    """Independent oracle: the fully real-arithmetic split of the model.

    g1 = 1 + R + sqrt(2) sqrt(R + a)
    g2 = (1 - R) cos(t) - sqrt(2) sqrt(R - a) sin(t)
    g3 = (1 - R) sin(t) + sqrt(2) sqrt(R - a) cos(t)
    with R = sqrt(a^2 + b^2), t = c - c1*m; model = (g2 + j g3) / g1.
    """
    big_r = math.hypot(a, b)
    t = c - c1 * m
    root = math.sqrt(2.0) * math.sqrt(max(big_r - a, 0.0))
    g1 = 1.0 + big_r + math.sqrt(2.0) * math.sqrt(big_r + a)
    g2 = (1.0 - big_r) * math.cos(t) - root * math.sin(t)
    g3 = (1.0 - big_r) * math.sin(t) + root * math.cos(t)
    return complex(g2 / g1, g3 / g1)


class TestSdiDataset:
    def test_needs_three_samples(self):
        with pytest.raises(ValueError):
            SdiDataset(np.array([1.0, 2.0]), 1e-4, 79e9)

    def test_positive_step(self):
        with pytest.raises(ValueError):
            SdiDataset(np.ones(5), 0.0, 79e9)

    def test_aliasing_guard(self):
        # quarter wavelength at 79 GHz is ~0.95 mm; a 1 mm step aliases
        with pytest.raises(AliasingError):
            SdiDataset(np.ones(5), 1e-3, 79e9)

    def test_step_phase_value(self):
        d = SdiDataset(np.ones(5), 1e-4, 79e9)
        assert math.degrees(d.step_phase) == pytest.approx(18.9731, abs=1e-3)


class TestModelGamma:
    def test_no_contrast(self):
        assert model_gamma(1.0, 0.0, 1.3, 7, C1_79GHZ) == 0

    def test_exact_fresnel_case(self):
        assert model_gamma(4.0, 0.0, 0.0, 0, C1_79GHZ) == pytest.approx(-1.0 / 3.0)

    def test_matches_fresnel_rotation(self):
        rng = np.random.default_rng(42)
        m = np.arange(17)
        for _ in range(30):
            a, b = rng.uniform(1, 30), rng.uniform(0, 5)
            c = rng.uniform(-math.pi, math.pi)
            gamma, _ = fresnel_normal(AIR, ComplexPermittivity(a, b))
            expected = gamma * np.exp(1j * (c - C1_79GHZ * m))
            np.testing.assert_allclose(
                model_gamma(a, b, c, m, C1_79GHZ), expected, atol=1e-12
            )

    def test_matches_real_form(self):
        rng = np.random.default_rng(43)
        for _ in range(40):
            a, b = rng.uniform(1, 30), rng.uniform(0, 5)
            c = rng.uniform(-math.pi, math.pi)
            m = int(rng.integers(0, 40))
            got = model_gamma(a, b, c, m, C1_79GHZ)
            assert got == pytest.approx(real_form_model(a, b, c, m, C1_79GHZ), abs=1e-12)

    def test_step_is_phase_rotation(self):
        a, b, c = 2.0, 0.1, 0.3
        for m in range(1, 10):
            lhs = model_gamma(a, b, c, m, C1_79GHZ)
            rhs = model_gamma(a, b, c - C1_79GHZ, m - 1, C1_79GHZ)
            assert abs(lhs - rhs) <= 1e-12

    def test_periodicity_about_19_steps(self):
        period = 2 * math.pi / C1_79GHZ
        assert period == pytest.approx(19.0, abs=0.05)
        seq = model_gamma(2.0, 0.1, 0.0, np.arange(40), C1_79GHZ)
        assert abs(seq[19] - seq[0]) < 0.01


class TestResiduals:
    def test_zero_at_generating_parameters(self):
        data = quiet_dataset(3.0, 0.15, 0.5)
        res = residuals((3.0, 0.15, 0.5), data)
        assert np.max(np.abs(res)) <= 1e-12

    def test_zero_data_zero_model(self):
        data = SdiDataset(np.zeros(10, dtype=complex), 1e-4, 79e9)
        res = residuals((1.0, 0.0, 0.7), data)
        assert np.all(res == 0)

    def test_objective_matches_direct_oracle(self):
        data = quiet_dataset(3.0, 0.15, 0.0)
        params = (2.0, 0.1, 0.0)
        res = residuals(params, data)
        m = np.arange(data.step_count)
        direct = np.sum(
            np.abs(data.gammas - model_gamma(*params, m, data.step_phase)) ** 2
        )
        assert np.sum(res**2) == pytest.approx(direct, rel=1e-12)

    def test_interleaving_order(self):
        data = quiet_dataset(3.0, 0.15, 0.0, m_count=5)
        res = residuals((2.0, 0.1, 0.3), data)
        diff = data.gammas - model_gamma(2.0, 0.1, 0.3, np.arange(5), data.step_phase)
        np.testing.assert_allclose(res[0::2], diff.real)
        np.testing.assert_allclose(res[1::2], diff.imag)


def central_difference_jacobian(params, data, rel_step=1e-6):
    params = np.asarray(params, dtype=float)
    cols = []
    for i in range(3):
        h = rel_step * max(1.0, abs(params[i]))
        xp = params.copy()
        xp[i] += h
        xm = params.copy()
        xm[i] -= h
        cols.append((residuals(xp, data) - residuals(xm, data)) / (2 * h))
    return np.array(cols).T


class TestJacobian:
    def test_phase_column_is_model_rotation(self):
        data = quiet_dataset(3.0, 0.15, 0.2)
        params = (2.5, 0.3, -0.4)
        J = jacobian(params, data)
        model = model_gamma(2.5, 0.3, -0.4, np.arange(data.step_count), data.step_phase)
        np.testing.assert_allclose(J[0::2, 2], model.imag, atol=1e-14)
        np.testing.assert_allclose(J[1::2, 2], -model.real, atol=1e-14)

    def test_matches_central_differences_interior(self):
        rng = np.random.default_rng(7)
        data = quiet_dataset(3.0, 0.15, 0.4, m_count=10)
        for _ in range(50):
            params = (rng.uniform(1.2, 20), rng.uniform(0.05, 3), rng.uniform(-3, 3))
            J = jacobian(params, data)
            J_fd = central_difference_jacobian(params, data)
            assert np.max(np.abs(J - J_fd)) <= 1e-5

    def test_boundary_one_sided_check(self):
        data = quiet_dataset(3.0, 0.0, 0.1, m_count=8)
        params = np.array([2.0, 0.0, 0.1])
        J = jacobian(params, data)
        h = 1e-7
        forward = (residuals(params + [0, h, 0], data) - residuals(params, data)) / h
        np.testing.assert_allclose(J[:, 1], forward, atol=1e-5)


class TestFitPermittivity:
    def test_seeded_noiseless_recovery(self):
        data = quiet_dataset(3.0, 0.15, 0.5)
        fit = fit_permittivity(data, starts=[(3.0, 0.15, 0.5)])
        assert fit.converged
        assert fit.permittivity.real_part == pytest.approx(3.0, abs=1e-6)
        assert fit.permittivity.imag_part == pytest.approx(0.15, abs=1e-6)
        assert fit.phase_offset == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("a,b", [(2.0, 0.1), (3.0, 0.15), (7.0, 0.3)])
    def test_reference_materials_round_trip(self, a, b):
        data = quiet_dataset(a, b, -0.8)
        fit = fit_permittivity(data, starts=[(a, b, -0.8)])
        assert fit.permittivity.real_part == pytest.approx(a, abs=1e-6)
        assert fit.permittivity.imag_part == pytest.approx(b, abs=1e-6)

    def test_auto_start_reaches_zero_residual(self):
        data = quiet_dataset(2.6, 0.1, 0.5)
        fit = fit_permittivity(data)
        assert fit.converged
        assert fit.residual_norm <= 1e-8
        model = model_gamma(
            fit.permittivity.real_part,
            fit.permittivity.imag_part,
            fit.phase_offset,
            np.arange(data.step_count),
            data.step_phase,
        )
        np.testing.assert_allclose(model, data.gammas, atol=1e-9)

    def test_lossless_boundary_recovery(self):
        data = quiet_dataset(3.0, 0.0, 0.2)
        fit = fit_permittivity(data, starts=[(3.0, 0.0, 0.2)])
        assert fit.permittivity.imag_part == pytest.approx(0.0, abs=1e-8)
        assert fit.permittivity.real_part == pytest.approx(3.0, abs=1e-6)

    def test_degenerate_data_raises(self):
        data = SdiDataset(np.zeros(10, dtype=complex) + 1e-15, 1e-4, 79e9)
        with pytest.raises(DegenerateDataError):
            fit_permittivity(data)

    def test_no_convergence_raises(self):
        noisy = generate_dataset(
            ComplexPermittivity(2.6, 0.1), 0.3, 40, 1e-4, 79e9, NoiseModel(seed=3)
        )
        with pytest.raises(NoConvergenceError):
            fit_permittivity(noisy, max_iter=0)

    def test_deterministic(self):
        data = generate_dataset(
            ComplexPermittivity(2.6, 0.1), 0.9, 40, 1e-4, 79e9, NoiseModel(seed=5)
        )
        f1 = fit_permittivity(data)
        f2 = fit_permittivity(data)
        assert f1.permittivity == f2.permittivity
        assert f1.phase_offset == f2.phase_offset
        assert f1.residual_norm == f2.residual_norm
        assert f1.iterations == f2.iterations

    def test_phase_offset_reported_wrapped(self):
        data = quiet_dataset(2.6, 0.1, 3.0)
        fit = fit_permittivity(data, starts=[(2.6, 0.1, 3.0 + 2 * math.pi)])
        assert -math.pi <= fit.phase_offset < math.pi
        assert fit.phase_offset == pytest.approx(3.0, abs=1e-6)

    def test_rejects_bad_start_policy(self):
        data = quiet_dataset(2.6, 0.1, 0.0)
        with pytest.raises(ValueError):
            fit_permittivity(data, starts="magic")
        with pytest.raises(ValueError):
            fit_permittivity(data, starts=[])


class TestFitIdeal:
    # thick lossy slab: internal bounces are fully absorbed, so the
    # front-face reflection is a smooth, invertible function of eps
    GEOM = SlabGeometry(thickness=0.1, standoff=0.25, backing=METAL)
    FREQ = 79e9

    def ideal_sweep(self, eps, standoff_error=0.0, m_count=12, step=1e-4):
        face = effective_reflection(eps, self.GEOM, self.FREQ)
        k1 = 2 * math.pi * self.FREQ / SPEED_OF_LIGHT
        m = np.arange(m_count)
        true_standoff = self.GEOM.standoff + standoff_error
        return face * np.exp(2j * k1 * (true_standoff + m * step))

    def test_blind_recovery_known_geometry(self):
        eps = ComplexPermittivity(3.0, 0.3)
        gammas = self.ideal_sweep(eps)
        fit = fit_ideal(gammas, self.GEOM, 1e-4, self.FREQ)
        assert fit.converged
        assert fit.permittivity.real_part == pytest.approx(3.0, abs=1e-6)
        assert fit.permittivity.imag_part == pytest.approx(0.3, abs=1e-6)
        assert fit.phase_offset == 0.0

    def test_standoff_error_biases_fit(self):
        # 50 um of unmodeled standoff shifts every sample by ~9.5 deg of
        # round-trip phase, which the model cannot absorb
        eps = ComplexPermittivity(3.0, 0.3)
        k1 = 2 * math.pi * self.FREQ / SPEED_OF_LIGHT
        phase_err = math.degrees(2 * k1 * 50e-6)
        assert phase_err == pytest.approx(9.5, abs=0.05)
        gammas = self.ideal_sweep(eps, standoff_error=50e-6)
        fit = fit_ideal(gammas, self.GEOM, 1e-4, self.FREQ)
        bias = abs(fit.permittivity.real_part - 3.0) + abs(
            fit.permittivity.imag_part - 0.3
        )
        assert bias > 0.01

    def test_air_data_degenerate(self):
        with pytest.raises(DegenerateDataError):
            fit_ideal(np.zeros(8, dtype=complex), self.GEOM, 1e-4, self.FREQ)


class TestPhaseSlopeDiagnostic:
    def test_noiseless_analytic_slope(self):
        data = quiet_dataset(2.6, 0.1, 0.0)
        slope, r2 = phase_slope_diagnostic(data)
        assert slope == pytest.approx(-189.73, abs=0.05)
        assert r2 >= 1 - 1e-9

    def test_constant_phase_raises(self):
        data = SdiDataset(np.full(10, 0.5 + 0.0j), 1e-4, 79e9)
        with pytest.raises(DegenerateRegressionError):
            phase_slope_diagnostic(data)


def test_wrap_phase_range():
    for c in np.linspace(-20, 20, 101):
        w = wrap_phase(float(c))
        assert -math.pi <= w < math.pi
        assert abs(math.remainder(w - c, 2 * math.pi)) < 1e-12


def test_fit_bounds_validation():
    with pytest.raises(ValueError):
        FitBounds(a_max=1.0)
    with pytest.raises(ValueError):
        FitBounds(b_max=0.0)

"""
Voigt 대수와 SMA 구성 요소 테스트
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from app.domain.exceptions import (
    HardeningSingularityError,
    MaterialError,
    SingularMatrixError,
    ZeroEffectiveStressError,
)
from app.domain.model.material_model import HardeningKind, TransformDirection
from app.domain.schema.sim_schema import MaterialConfig
from app.domain.service.material_service import build_material_service
from app.domain.service.verification_service import fd_check
from app.domain.service.voigt_service import (
    SOLID,
    compliance_matrix,
    compliance_shape,
    deviatoric,
    effective_strain,
    invert6,
    stress_contract,
    to_tensor,
    von_mises,
)

FWD = TransformDirection.FORWARD
REV = TransformDirection.REVERSE


def _random_stress(rng, scale=2e8):
    return deviatoric(rng.normal(size=6)) * scale + rng.normal() * 5e7 * np.array([1, 1, 1, 0, 0, 0.0])


# ========== Voigt 대수 ==========

class TestVoigt:
    def test_deviatoric_examples(self):
        assert_allclose(deviatoric([3.0, 3.0, 3.0, 0, 0, 0]), np.zeros(6), atol=1e-15)
        assert_allclose(deviatoric([3.0, 0, 0, 0, 0, 0]), [2.0, -1.0, -1.0, 0, 0, 0])
        assert_allclose(deviatoric([1.0, 2, 3, 4, 5, 6]), [-1.0, 0, 1, 4, 5, 6])

    def test_deviatoric_idempotent_and_trace_free(self, rng):
        for _ in range(50):
            v = rng.normal(size=6) * 1e8
            d = deviatoric(v)
            assert abs(d[:3].sum()) <= 1e-12 * np.linalg.norm(v)
            assert_allclose(deviatoric(d), d, rtol=1e-14, atol=1e-6)
            assert von_mises(d) == pytest.approx(von_mises(v), rel=1e-12)

    def test_von_mises_examples(self):
        assert von_mises([-5.0e7, 0, 0, 0, 0, 0]) == pytest.approx(5.0e7)
        assert von_mises(np.zeros(6)) == 0.0
        assert von_mises([0, 0, 0, 2.0, 0, 0]) == pytest.approx(2.0 * np.sqrt(3.0))

    def test_compliance_matrix(self):
        S = 1.0 / 32.5e9
        C = compliance_matrix(S, 0.33)
        assert C[0, 0] == pytest.approx(3.0769e-11, rel=1e-4)
        assert_allclose(C, C.T, rtol=1e-12)
        strain = C @ np.array([1e8, 0, 0, 0, 0, 0])
        assert_allclose(strain, [S * 1e8, -0.33 * S * 1e8, -0.33 * S * 1e8, 0, 0, 0], rtol=1e-12)
        assert_allclose(np.diag(compliance_shape(0.0)), [1, 1, 1, 2, 2, 2])

    @pytest.mark.parametrize("nu", [0.5, -1.0, 0.7])
    def test_compliance_rejects_nonphysical_poisson(self, nu):
        with pytest.raises(MaterialError):
            compliance_matrix(1e-11, nu)

    def test_invert6_round_trip(self, rng):
        assert_allclose(invert6(np.eye(6)), np.eye(6))
        for _ in range(1000):
            m = rng.normal(size=(6, 6)) + 6.0 * np.eye(6)
            err = np.linalg.norm(m @ invert6(m) - np.eye(6))
            assert err < 1e-10

    def test_invert6_stiffness_reproduces_stress(self):
        C = compliance_matrix(1.0 / 32.5e9, 0.33)
        sigma = np.array([1e8, -2e7, 3e7, 4e6, -5e6, 6e6])
        assert_allclose(invert6(C) @ (C @ sigma), sigma, rtol=1e-10)

    def test_invert6_singular(self):
        with pytest.raises(SingularMatrixError) as exc:
            invert6(np.zeros((6, 6)))
        assert exc.value.exit_code == 1

    def test_contraction_matches_full_tensor(self, rng):
        for _ in range(100):
            sigma, strain = rng.normal(size=6), rng.normal(size=6)
            full = np.sum(to_tensor(sigma) * to_tensor(strain, strain_like=True))
            assert float(sigma @ strain) == pytest.approx(full, rel=1e-12, abs=1e-12)
            full_ss = np.sum(to_tensor(sigma) * to_tensor(sigma))
            assert stress_contract(sigma, sigma) == pytest.approx(full_ss, rel=1e-12)


# ========== 재료 보정 ==========

class TestCalibration:
    def test_quadratic_constants(self, solid):
        p = solid.params
        assert p.rho_bM == pytest.approx(3.696e6)
        assert p.rho_bA == pytest.approx(5.6595e6)
        assert p.Y == pytest.approx(3.205125e6)
        assert p.Y > 0 and p.rho_ds0 < 0

    @pytest.mark.parametrize("kind,rtol", [
        (HardeningKind.QUADRATIC, 1e-6),
        (HardeningKind.SMOOTH, 1e-6),
        (HardeningKind.COSINE, 1e-4),
    ])
    def test_phase_diagram_corners(self, kind, rtol):
        ms = build_material_service(MaterialConfig(hardening=kind), SOLID)
        p, zero = ms.params, np.zeros(6)
        tol = rtol * p.Y
        assert abs(ms.phi(0.0, zero, p.M_s, FWD)) < tol
        assert abs(ms.phi(1.0, zero, p.M_f, FWD)) < tol
        assert abs(ms.phi(1.0, zero, p.A_s, REV)) < tol
        assert abs(ms.phi(0.0, zero, p.A_f, REV)) < tol

    def test_exponential_start_conditions(self):
        ms = build_material_service(MaterialConfig(hardening="exponential"), SOLID)
        p, zero = ms.params, np.zeros(6)
        assert abs(ms.phi(0.0, zero, p.M_s, FWD)) < 1e-6 * p.Y
        assert abs(ms.phi(1.0, zero, p.A_s, REV)) < 1e-6 * p.Y

    def test_bad_temperature_order(self):
        with pytest.raises(ValidationError):
            MaterialConfig(M_s=300.0)

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            MaterialConfig(preset="CuAlNi")

    def test_effective_properties(self, solid):
        p = solid.params
        assert solid.effective_properties(0.0)[0] == pytest.approx(1.0 / 32.5e9)
        assert solid.effective_properties(1.0)[0] == pytest.approx(1.0 / 23.0e9)
        assert solid.effective_properties(0.5)[0] == pytest.approx(0.5 * (p.S_A + p.S_M))
        with pytest.raises(MaterialError):
            solid.effective_properties(1.0 + 1e-9)


# ========== 경화 함수 ==========

class TestHardening:
    def test_quadratic_forward(self, solid):
        p = solid.params
        f, df = solid.hardening(0.0, FWD)
        assert f == 0.0
        assert solid.hardening(0.3, FWD)[1] == pytest.approx(p.rho_bM * 0.3 + p.mu2)

    def test_smooth_unit_exponents_reduce_to_quadratic(self, solid):
        smooth = build_material_service(MaterialConfig(hardening="smooth"), SOLID)
        for direction in (FWD, REV):
            assert_allclose(smooth.hardening(0.5, direction), solid.hardening(0.5, direction), rtol=1e-12)

    def test_smooth_continuous(self):
        smooth = build_material_service(MaterialConfig(hardening="smooth", smooth_exponents=[2, 3, 1.5, 4]), SOLID)
        xs = np.linspace(1e-6, 1 - 1e-6, 200)
        slopes = np.array([smooth.hardening(x, FWD)[1] for x in xs])
        assert np.all(np.isfinite(slopes))
        assert np.max(np.abs(np.diff(slopes))) < 0.05 * np.ptp(slopes)

    @pytest.mark.parametrize("kind", list(HardeningKind))
    def test_curvature_matches_slope_derivative(self, kind):
        ms = build_material_service(MaterialConfig(hardening=kind, smooth_exponents=[2, 3, 1.5, 4]), SOLID)
        model = ms.hardening_model
        for direction in (FWD, REV):
            for xi in (0.2, 0.4, 0.7):
                slope = lambda x: model.evaluate(x[0], direction)[1]
                assert fd_check(slope, [xi], [model.curvature_at(xi, direction)]) < 1e-6

    def test_cosine_endpoint_singularity(self):
        cosine = build_material_service(MaterialConfig(hardening="cosine"), SOLID)
        with pytest.raises(HardeningSingularityError):
            cosine.hardening_model.evaluate(0.0, FWD, clamp=False)
        assert np.isfinite(cosine.hardening(0.0, FWD)[1])


# ========== 변태 텐서와 변태 함수 ==========

class TestTransformation:
    def test_forward_uniaxial_direction(self, solid):
        H = solid.params.H
        lam = solid.transformation_tensor(np.array([2e8, 0, 0, 0, 0, 0]), None, FWD)
        assert_allclose(lam, H * np.array([1.0, -0.5, -0.5, 0, 0, 0]), rtol=1e-12)

    def test_reverse_proportional(self, solid):
        H = solid.params.H
        reversal = H * np.array([1.0, -0.5, -0.5, 0, 0, 0])
        assert_allclose(solid.transformation_tensor(np.zeros(6), reversal, REV), reversal, rtol=1e-12)

    def test_forward_magnitude_and_trace(self, solid, rng):
        for _ in range(100):
            lam = solid.transformation_tensor(_random_stress(rng), None, FWD)
            assert abs(lam[:3].sum()) < 1e-14
            assert effective_strain(lam) == pytest.approx(solid.params.H, rel=1e-12)

    def test_zero_stress_forward(self, solid):
        with pytest.raises(ZeroEffectiveStressError):
            solid.transformation_tensor(np.zeros(6), None, FWD)
        assert_allclose(solid.transformation_tensor(np.zeros(6), None, FWD, self_accommodate=True), np.zeros(6))

    def test_d_lambda_null_space_and_fd(self, solid, rng):
        for _ in range(20):
            sigma = _random_stress(rng)
            D = solid.d_lambda_d_sigma(sigma, FWD)
            assert np.linalg.norm(D @ sigma) < 1e-10 * np.linalg.norm(D) * np.linalg.norm(sigma)
            err = fd_check(lambda s: solid.transformation_tensor(s, None, FWD), sigma, D)
            assert err < 1e-6
        assert_allclose(solid.d_lambda_d_sigma(sigma, REV), np.zeros((6, 6)))

    def test_phi_partials_fd(self, solid, rng):
        p = solid.params
        for _ in range(20):
            sigma = _random_stress(rng)
            xi, T = rng.uniform(0.1, 0.9), rng.uniform(200.0, 300.0)
            reversal = solid.transformation_tensor(_random_stress(rng), None, FWD) * 0.5
            for direction in (FWD, REV):
                part = solid.phi_and_partials(xi, sigma, T, direction, reversal)
                assert fd_check(lambda s: solid.phi(xi, s, T, direction, reversal), sigma, part.d_sigma) < 1e-6
                assert fd_check(lambda x: solid.phi(x[0], sigma, T, direction, reversal), [xi], [part.d_xi]) < 1e-6
                assert fd_check(lambda t: solid.phi(xi, sigma, t[0], direction, reversal), [T], [part.d_T]) < 1e-6
        assert solid.phi_and_partials(0.4, sigma, 250.0, FWD).d_xi == pytest.approx(-p.rho_bM)

    def test_driving_force_temperature_slope(self, solid):
        lam = np.zeros(6)
        pi_1 = solid.driving_force(0.3, np.zeros(6), 250.0, lam, FWD)
        pi_2 = solid.driving_force(0.3, np.zeros(6), 251.0, lam, FWD)
        assert pi_2 - pi_1 == pytest.approx(solid.params.rho_ds0, rel=1e-9)

    def test_driving_force_at_start(self, solid):
        p = solid.params
        assert solid.driving_force(0.0, np.zeros(6), p.M_s, np.zeros(6), FWD) == pytest.approx(p.Y, rel=1e-9)

    def test_none_direction_rejected(self, solid):
        with pytest.raises(MaterialError):
            solid.phi(0.5, np.ones(6), 250.0, TransformDirection.NONE)


# ========== 자기수용 구간 ==========

class TestSelfAccommodation:
    def test_threshold_is_relative_to_transformation_stress(self, solid):
        p = solid.params
        assert solid.zero_stress == pytest.approx(1e-6 * p.Y / p.H)
        assert solid.zero_strain == pytest.approx(1e-6 * p.H)
        assert 50.0 < solid.zero_stress < 200.0

    def test_small_stress_rejected_without_self_accommodation(self, solid):
        with pytest.raises(ZeroEffectiveStressError) as exc:
            solid.transformation_tensor(np.array([10.0, 0, 0, 0, 0, 0]), None, FWD)
        assert exc.value.detail["threshold"] == pytest.approx(solid.zero_stress)
        # 판정 값 위에서는 정상 방향
        lam = solid.transformation_tensor(np.array([1e3, 0, 0, 0, 0, 0]), None, FWD)
        assert effective_strain(lam) == pytest.approx(solid.params.H, rel=1e-12)

    def test_lambda_shrinks_linearly_and_continuously(self, solid):
        H, s0 = solid.params.H, solid.zero_stress
        direction = np.array([1.0, 0, 0, 0, 0, 0])
        for fraction in (0.25, 0.5, 0.9):
            lam = solid.transformation_tensor(fraction * s0 * direction, None, FWD, self_accommodate=True)
            assert effective_strain(lam) == pytest.approx(fraction * H, rel=1e-10)
        below = solid.transformation_tensor((1.0 - 1e-9) * s0 * direction, None, FWD, self_accommodate=True)
        above = solid.transformation_tensor((1.0 + 1e-9) * s0 * direction, None, FWD)
        assert_allclose(below, above, rtol=1e-8)

    def test_phi_gradient_in_regularized_range(self, solid, rng):
        s0 = solid.zero_stress
        for _ in range(10):
            v = deviatoric(rng.normal(size=6))
            sigma = 0.4 * s0 * v / von_mises(v)
            part = solid.phi_and_partials(0.3, sigma, 230.0, FWD)
            err = fd_check(lambda s: solid.phi(0.3, s, 230.0, FWD), sigma, part.d_sigma,
                           ladder=(1e-1, 1e-2), scale=np.full(6, 10.0))
            assert err < 1e-6
            D = solid.d_lambda_d_sigma(sigma, FWD, self_accommodate=True)
            assert_allclose(D @ sigma, part.lam, rtol=1e-10)

    def test_reverse_without_record(self, solid):
        assert_allclose(solid.transformation_tensor(np.zeros(6), None, REV, self_accommodate=True), np.zeros(6))
        with pytest.raises(MaterialError):
            solid.transformation_tensor(np.zeros(6), np.full(6, 1e-12), REV)

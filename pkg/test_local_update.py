"""
가우스점 국부 갱신 테스트 (방향 판정, 닫힌 형태 증분, 기법 동등성, 일관 접선)
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.domain.exceptions import LocalConvergenceError
from app.domain.model.material_model import TransformDirection
from app.domain.model.state_model import InternalState, LocalScheme, StateIncrement
from app.domain.service.local_update_service import LocalUpdateService
from app.domain.service.verification_service import (
    build_gauss_battery,
    dense_local_oracle,
    fd_check,
    local_jacobian,
    local_jacobian_fd,
    perturbed_iterate,
    scaled_difference,
    state_scale,
)

FWD = TransformDirection.FORWARD
REV = TransformDirection.REVERSE
NONE = TransformDirection.NONE


def _resolve(ms, problem, scheme=LocalScheme.NEWTON_RAPHSON, e_H=1e-11):
    local = LocalUpdateService(ms, scheme, e_H=e_H, max_inner=200)
    return local.resolve_local(problem.state_n, problem.eps, problem.T)[0]


# ========== 탄성 예측과 방향 판정 ==========

class TestDirection:
    def test_free_thermal_expansion_is_stress_free(self, uniaxial):
        local = LocalUpdateService(uniaxial)
        state_n = InternalState.initial(1, uniaxial.params.S_A)
        sigma, phi_fwd, _ = local.trial_elastic(state_n, uniaxial.thermal_strain(250.0), 250.0)
        assert_allclose(sigma, [0.0], atol=1e-6)
        assert phi_fwd < 0.0

    def test_rest_state_is_elastic(self, solid):
        local = LocalUpdateService(solid)
        state_n = InternalState.initial(6, solid.params.S_A)
        state, iterations = local.resolve_local(state_n, np.zeros(6), solid.params.T0)
        assert iterations == 0
        assert state.direction == NONE
        assert_allclose(state.sigma, np.zeros(6), atol=1e-6)

    @pytest.mark.parametrize("phi_fwd,phi_rev,xi_n,expected", [
        (1.0, -1.0, 0.0, FWD),
        (1.0, -1.0, 1.0, NONE),
        (-1.0, 1.0, 0.5, REV),
        (-1.0, 1.0, 0.0, NONE),
        (-1.0, -1.0, 0.5, NONE),
        (0.0, 0.0, 0.5, NONE),
    ])
    def test_detect_direction(self, phi_fwd, phi_rev, xi_n, expected):
        assert LocalUpdateService.detect_direction(phi_fwd, phi_rev, xi_n) == expected


# ========== 응력 없는 냉각 ==========

class TestStressFreeCooling:
    def test_half_transformed_at_210K(self, uniaxial):
        local = LocalUpdateService(uniaxial, LocalScheme.CLOSEST_POINT, e_H=1e-10)
        state_n = InternalState.initial(1, uniaxial.params.S_A)
        state, iterations = local.resolve_local(state_n, uniaxial.thermal_strain(210.0), 210.0)
        assert iterations >= 1
        assert state.xi == pytest.approx(0.5, abs=1e-9)
        assert_allclose(state.eps_t, [0.0], atol=1e-15)
        assert_allclose(state.sigma, [0.0], atol=1e-3)
        assert state.S == pytest.approx(uniaxial.params.S_A + 0.5 * uniaxial.params.delta_S, rel=1e-12)

    def test_below_finish_temperature_saturates(self, uniaxial):
        local = LocalUpdateService(uniaxial, LocalScheme.CLOSEST_POINT, e_H=1e-10)
        state_n = InternalState.initial(1, uniaxial.params.S_A)
        state, _ = local.resolve_local(state_n, uniaxial.thermal_strain(180.0), 180.0)
        assert state.xi == 1.0
        assert state.saturated
        assert state.direction == NONE
        assert state.S == pytest.approx(uniaxial.params.S_M, rel=1e-12)


# ========== 잔차와 닫힌 형태 증분 ==========

class TestClosedForm:
    def test_residual_vanishes_at_converged_state(self, solid, newton):
        problem = build_gauss_battery(solid, 4, 0)[0]
        state = _resolve(solid, problem)
        assert state.direction == FWD
        residual = newton.local_residual(state, problem.state_n, problem.eps, problem.T, FWD)
        assert newton.residual_norm(residual) < 1e-11

    def test_zero_residual_gives_zero_increment(self, solid, newton):
        problem = build_gauss_battery(solid, 2, 0)[0]
        state = _resolve(solid, problem)
        residual = newton.local_residual(state, problem.state_n, problem.eps, problem.T, FWD)
        for scheme in LocalScheme:
            inc = newton.delta_nu(state, problem.state_n, residual, problem.eps, problem.T, FWD, scheme)
            assert abs(inc.d_xi) < 1e-9
            assert np.linalg.norm(inc.d_sigma) < 1e-9 * solid.params.E_A

    def test_zero_displacement_gives_zero_coupling(self, solid, newton):
        problem = build_gauss_battery(solid, 2, 0)[0]
        state = problem.state_n.evolve(direction=FWD)
        inc = newton.delta_nu_star(state, problem.state_n, np.zeros(24), np.ones((6, 24)), problem.eps, problem.T, FWD)
        assert inc.d_xi == 0.0
        assert_allclose(inc.as_vector(), StateIncrement.zero(6).as_vector())

    @pytest.mark.parametrize("space", ["solid", "uniaxial"])
    def test_matches_dense_oracle(self, space, request):
        ms = request.getfixturevalue(space)
        rng = np.random.default_rng(11)
        local = LocalUpdateService(ms, LocalScheme.NEWTON_RAPHSON)
        battery = build_gauss_battery(ms, 4, 4)
        n_dofs = 2 if ms.space.size == 1 else 24
        for problem in battery:
            state = perturbed_iterate(ms, problem, rng)
            B = rng.normal(size=(ms.space.size, n_dofs))
            du = rng.normal(size=n_dofs) * 1e-4
            oracle = dense_local_oracle(local, state, problem.state_n, problem.eps, problem.T, problem.direction, du, B)
            residual = local.local_residual(state, problem.state_n, problem.eps, problem.T, problem.direction)
            closed = local.delta_nu(state, problem.state_n, residual, problem.eps, problem.T, problem.direction)
            star = local.delta_nu_star(state, problem.state_n, du, B, problem.eps, problem.T, problem.direction)
            assert scaled_difference(closed, oracle.increment, ms.params) < 1e-8
            assert scaled_difference(star, oracle.star_increment, ms.params) < 1e-8
            assert oracle.condition > 1e9

    def test_analytic_jacobian_matches_finite_difference(self, solid, newton):
        rng = np.random.default_rng(3)
        p = solid.params
        scale = state_scale(p, 6)
        row_scale = np.concatenate(([p.Y], np.full(6, p.H), [abs(p.delta_S)], np.full(6, p.E_A)))
        for problem in build_gauss_battery(solid, 3, 3):
            state = perturbed_iterate(solid, problem, rng)
            args = (state, problem.state_n, problem.eps, problem.T, problem.direction)
            J = local_jacobian(newton, *args) * scale[None, :] / row_scale[:, None]
            J_fd = local_jacobian_fd(newton, *args) * scale[None, :] / row_scale[:, None]
            assert np.linalg.norm(J_fd - J) / np.linalg.norm(J) < 1e-6

    def test_cutting_plane_step_is_scalar_newton(self, uniaxial):
        """응력이 탄성 예측과 같을 때 CT 의 δξ 는 Φ(Δξ) 에 대한 스칼라 Newton 스텝"""
        ms = uniaxial
        p = ms.params
        T, sigma_trial = 250.0, 2.0e8
        state_n = InternalState.initial(1, p.S_A)
        eps = np.array([p.S_A * sigma_trial]) + ms.thermal_strain(T)
        local = LocalUpdateService(ms, LocalScheme.CUTTING_PLANE)
        state = state_n.evolve(sigma=np.array([sigma_trial]), direction=FWD)
        residual = local.local_residual(state, state_n, eps, T, FWD)
        d_xi = local.delta_nu(state, state_n, residual, eps, T, FWD).d_xi

        lam = ms.transformation_tensor(np.array([sigma_trial]), None, FWD)

        def phi_of(dx):
            S = p.S_A + p.delta_S * dx
            sigma = (eps - ms.thermal_strain(T) - lam * dx) / S
            return ms.phi(dx, sigma, T, FWD)

        # ξ ≥ 0 이므로 2차 정확도 전진 차분
        h = 1e-6
        slope = (-3.0 * phi_of(0.0) + 4.0 * phi_of(h) - phi_of(2.0 * h)) / (2.0 * h)
        assert d_xi > 0.0
        assert d_xi == pytest.approx(-phi_of(0.0) / slope, rel=1e-5)


# ========== 기법 동등성 ==========

class TestSchemeEquivalence:
    @pytest.mark.parametrize("space", ["solid", "uniaxial"])
    def test_all_schemes_reach_same_state(self, space, request):
        ms = request.getfixturevalue(space)
        battery = build_gauss_battery(ms, 6, 4, seed=23)
        assert any(problem.direction == REV for problem in battery)
        for problem in battery:
            reference = _resolve(ms, problem)
            for scheme in (LocalScheme.RADIAL_RETURN, LocalScheme.CLOSEST_POINT, LocalScheme.CUTTING_PLANE):
                other = _resolve(ms, problem, scheme)
                assert other.xi == pytest.approx(reference.xi, abs=1e-8)
                assert np.linalg.norm(other.eps_t - reference.eps_t) / ms.params.H < 1e-8
                assert np.linalg.norm(other.sigma - reference.sigma) <= 1e-8 * max(np.linalg.norm(reference.sigma), 1.0)

    @pytest.mark.parametrize("space", ["solid", "uniaxial"])
    def test_default_battery_is_complete(self, space, request):
        battery = build_gauss_battery(request.getfixturevalue(space))
        assert sum(problem.direction == FWD for problem in battery) == 20
        assert sum(problem.direction == REV for problem in battery) == 20

    def test_reverse_keeps_reversal_direction(self, solid):
        reverse = [pr for pr in build_gauss_battery(solid, 4, 4, seed=23) if pr.direction == REV]
        for problem in reverse:
            state = _resolve(solid, problem)
            d_xi = state.xi - problem.state_n.xi
            assert d_xi < 0.0
            lam = solid.transformation_tensor(None, problem.state_n.reversal_eps_t, REV)
            assert_allclose(state.eps_t, problem.state_n.eps_t + lam * d_xi, atol=1e-10 * solid.params.H)

    def test_iteration_limit(self, solid):
        problem = build_gauss_battery(solid, 2, 0)[1]
        local = LocalUpdateService(solid, LocalScheme.NEWTON_RAPHSON, e_H=1e-14, max_inner=1)
        with pytest.raises(LocalConvergenceError) as exc:
            local.resolve_local(problem.state_n, problem.eps, problem.T)
        assert exc.value.iterations == 1
        assert len(exc.value.residual_blocks) == 4
        assert exc.value.exit_code == 2


# ========== 일관 접선 ==========

class TestConsistentTangent:
    def test_elastic_tangent_is_stiffness(self, solid, newton):
        state_n = InternalState.initial(6, solid.params.S_A)
        tangent = newton.consistent_tangent(state_n, state_n, np.zeros(6), 300.0, NONE)
        assert_allclose(tangent, solid.stiffness(solid.params.S_A))

    def test_symmetric_at_convergence(self, solid, newton):
        for problem in build_gauss_battery(solid, 4, 0, seed=19):
            state = _resolve(solid, problem, e_H=1e-13)
            if state.direction == NONE:
                continue
            L = newton.consistent_tangent(state, problem.state_n, problem.eps, problem.T, state.direction)
            assert_allclose(L, L.T, atol=1e-6 * np.max(np.abs(L)))

    def test_matches_finite_difference(self, solid):
        local = LocalUpdateService(solid, LocalScheme.NEWTON_RAPHSON, e_H=1e-13, max_inner=200)
        checked = 0
        for problem in build_gauss_battery(solid, 4, 0, seed=19):
            state, _ = local.resolve_local(problem.state_n, problem.eps, problem.T)
            if state.direction == NONE:
                continue
            tangent = local.consistent_tangent(state, problem.state_n, problem.eps, problem.T, state.direction)
            err = fd_check(
                lambda e: local.resolve_local(problem.state_n, e, problem.T)[0].sigma,
                problem.eps, tangent, ladder=(1e-4, 1e-5), scale=np.full(6, 1e-2),
            )
            assert err < 1e-5
            checked += 1
        assert checked > 0

    def test_softer_than_elastic_when_transforming(self, uniaxial):
        local = LocalUpdateService(uniaxial, LocalScheme.CLOSEST_POINT, e_H=1e-12)
        p = uniaxial.params
        state_n = InternalState.initial(1, p.S_A)
        T = 250.0
        eps = np.array([p.S_A * 2.0e8]) + uniaxial.thermal_strain(T)
        state, _ = local.resolve_local(state_n, eps, T)
        assert state.direction == FWD
        tangent = local.consistent_tangent(state, state_n, eps, T, FWD)
        assert 0.0 < tangent[0, 0] < 1.0 / state.S

"""
가우스점 내부상태 갱신 서비스

국부 잔차 H, 변태 방향 판정, Schur 소거 기반 닫힌 형태 증분 (δν, δν*),
네 가지 갱신 기법과 일관 접선 𝔏 을 제공한다.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.config.settings import E_H, MAX_INNER, SCHUR_SCALAR_TOL
from app.domain.exceptions import LocalConvergenceError, SingularMatrixError
from app.domain.model.material_model import PhiPartials, TransformDirection
from app.domain.model.state_model import InternalState, LocalResidual, LocalScheme, StateIncrement
from app.domain.service.material_service import MaterialService
from app.domain.service.voigt_service import invert6

logger = logging.getLogger(__name__)

_BOUND_TOL = 1e-12


@dataclass(frozen=True)
class LocalLinearization:
    """한 반복점에서의 국부 선형화 (Schur 소거용 보조량)"""
    compliance: np.ndarray    # C = S𝔠
    zeta_inv: np.ndarray      # (C + ∂σΛ·Δξ)⁻¹, cutting-plane 은 C⁻¹
    a_matrix: np.ndarray      # ∂σΛ·Δξ
    shape_sigma: np.ndarray   # 𝔠σ̂
    partials: PhiPartials
    m: np.ndarray             # ζ⁻¹(Λ + ΔS𝔠σ̂)
    q: float                  # ∂σΦ·m − ∂ξΦ


class LocalUpdateService:
    """가우스점 국부 해법"""

    def __init__(
        self,
        material: MaterialService,
        scheme: LocalScheme = LocalScheme.CLOSEST_POINT,
        e_H: float = E_H,
        max_inner: int = MAX_INNER,
    ):
        self.material = material
        self.scheme = LocalScheme(scheme)
        self.e_H = e_H
        self.max_inner = max_inner

    # ---------- 잔차 ----------

    def residual_norm(self, residual: LocalResidual) -> float:
        p = self.material.params
        return residual.norm(p.Y, p.H, p.delta_S, p.E_A)

    def residual_blocks(self, residual: LocalResidual) -> list:
        p = self.material.params
        return [float(v) for v in residual.normalized(p.Y, p.H, p.delta_S, p.E_A)]

    def trial_elastic(self, state_n: InternalState, eps: np.ndarray, T: float) -> Tuple[np.ndarray, float, float]:
        """동결된 (ξ, εᵗ, S) 로 탄성 예측 (σ_trial, Φ_fwd, Φ_rev)"""
        ms = self.material
        sigma = ms.elastic_stress(eps, T, state_n.eps_t, state_n.S)
        phi_fwd = ms.phi(state_n.xi, sigma, T, TransformDirection.FORWARD, state_n.reversal_eps_t)
        phi_rev = ms.phi(state_n.xi, sigma, T, TransformDirection.REVERSE, state_n.reversal_eps_t)
        return sigma, phi_fwd, phi_rev

    @staticmethod
    def detect_direction(phi_fwd: float, phi_rev: float, xi_n: float) -> TransformDirection:
        """Kuhn-Tucker 조건으로 변태 방향 판정"""
        forward = phi_fwd > 0.0 and xi_n < 1.0 - _BOUND_TOL
        reverse = phi_rev > 0.0 and xi_n > _BOUND_TOL
        if forward and reverse:
            # Y > 0 이면 나올 수 없는 경우
            logger.warning(f"⚠️ 정/역변태 면이 동시에 위반됨 (Φ_fwd={phi_fwd:.3e}, Φ_rev={phi_rev:.3e})")
            return TransformDirection.FORWARD if phi_fwd >= phi_rev else TransformDirection.REVERSE
        if forward:
            return TransformDirection.FORWARD
        if reverse:
            return TransformDirection.REVERSE
        return TransformDirection.NONE

    def local_residual(
        self,
        state: InternalState,
        state_n: InternalState,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
    ) -> LocalResidual:
        """국부 잔차 (H_Φ, H_εt, H_S, H_σ), Λ 는 현재 반복점의 σ 에서 평가"""
        ms = self.material
        partials = ms.phi_and_partials(state.xi, state.sigma, T, direction, state_n.reversal_eps_t)
        d_xi = state.xi - state_n.xi
        return LocalResidual(
            h_phi=partials.phi,
            h_eps_t=state_n.eps_t + partials.lam * d_xi - state.eps_t,
            h_S=state_n.S + ms.params.delta_S * d_xi - state.S,
            h_sigma=ms.elastic_stress(eps, T, state.eps_t, state.S) - state.sigma,
        )

    # ---------- 선형화와 Schur 해 ----------

    def linearize(
        self,
        state: InternalState,
        state_n: InternalState,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        scheme: Optional[LocalScheme] = None,
    ) -> LocalLinearization:
        ms = self.material
        scheme = scheme or self.scheme
        partials = ms.phi_and_partials(state.xi, state.sigma, T, direction, state_n.reversal_eps_t)
        compliance = ms.compliance(state.S)
        if scheme == LocalScheme.CUTTING_PLANE:
            a_matrix = np.zeros_like(compliance)
        else:
            d_lambda = ms.d_lambda_d_sigma(state.sigma, direction, self_accommodate=True)
            a_matrix = d_lambda * (state.xi - state_n.xi)
        zeta_inv = invert6(compliance + a_matrix)
        sigma_hat = ms.elastic_stress(eps, T, state.eps_t, state.S)
        shape_sigma = ms.shape @ sigma_hat
        m = zeta_inv @ (partials.lam + ms.params.delta_S * shape_sigma)
        q = float(partials.d_sigma @ m - partials.d_xi)
        return LocalLinearization(compliance, zeta_inv, a_matrix, shape_sigma, partials, m, q)

    @staticmethod
    def _schur_solve(lin: LocalLinearization, residual: LocalResidual, delta_S: float) -> StateIncrement:
        """−(∂H/∂ν)⁻¹H 를 블록 소거로 계산"""
        if abs(lin.q) < SCHUR_SCALAR_TOL:
            raise SingularMatrixError(f"Schur 스칼라 Q 가 0 입니다 ({lin.q:.3e})", float("inf"))
        g = lin.partials.d_sigma
        r = lin.zeta_inv @ (
            lin.compliance @ residual.h_sigma - residual.h_eps_t - lin.shape_sigma * residual.h_S
        )
        d_xi = (residual.h_phi + g @ r) / lin.q
        d_sigma = r - lin.m * d_xi
        d_eps_t = lin.partials.lam * d_xi + lin.a_matrix @ d_sigma + residual.h_eps_t
        d_S = delta_S * d_xi + residual.h_S
        return StateIncrement(float(d_xi), d_eps_t, float(d_S), d_sigma)

    def _masked(self, residual: LocalResidual, scheme: LocalScheme) -> LocalResidual:
        """기법별로 소거되는 블록을 0 으로"""
        if scheme == LocalScheme.RADIAL_RETURN:
            return residual.without(sigma=True)
        if scheme == LocalScheme.CLOSEST_POINT:
            return residual.without(S=True, sigma=True)
        if scheme == LocalScheme.CUTTING_PLANE:
            return residual.without(eps_t=True, S=True, sigma=True)
        return residual

    def delta_nu(
        self,
        state: InternalState,
        state_n: InternalState,
        residual: LocalResidual,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        scheme: Optional[LocalScheme] = None,
        lin: Optional[LocalLinearization] = None,
    ) -> StateIncrement:
        """국부 Newton 증분 δν (같은 반복점의 선형화가 있으면 재사용)"""
        scheme = scheme or self.scheme
        lin = lin or self.linearize(state, state_n, eps, T, direction, scheme)
        return self._schur_solve(lin, self._masked(residual, scheme), self.material.params.delta_S)

    def delta_nu_star(
        self,
        state: InternalState,
        state_n: InternalState,
        du: np.ndarray,
        B: np.ndarray,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        scheme: Optional[LocalScheme] = None,
        lin: Optional[LocalLinearization] = None,
    ) -> StateIncrement:
        """변위 증분에 의한 연성 증분 −(∂H/∂ν)⁻¹(∂H/∂u)δu (응력 행 = 𝔏·Bδu)"""
        d_eps = B @ du
        size = self.material.space.size
        if not np.any(d_eps):
            return StateIncrement.zero(size)
        lin = lin or self.linearize(state, state_n, eps, T, direction, scheme)
        coupling = LocalResidual(0.0, np.zeros(size), 0.0, self.material.stiffness(state.S) @ d_eps)
        return self._schur_solve(lin, coupling, self.material.params.delta_S)

    def consistent_tangent(
        self,
        state: InternalState,
        state_n: InternalState,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        scheme: Optional[LocalScheme] = None,
        lin: Optional[LocalLinearization] = None,
    ) -> np.ndarray:
        """일관 접선 𝔏 = ζ⁻¹ − (m ⊗ ζ⁻¹∂σΦ)/Q, 탄성이면 𝐒⁻¹"""
        ms = self.material
        if direction == TransformDirection.NONE:
            if state.saturated and state.xi >= 1.0 - _BOUND_TOL:
                # ξ 고정, Λ(σ) 만 남은 정변태 포화
                d_lambda = ms.d_lambda_d_sigma(state.sigma, TransformDirection.FORWARD, self_accommodate=True)
                return invert6(ms.compliance(state.S) + d_lambda * (state.xi - state_n.xi))
            return ms.stiffness(state.S)
        lin = lin or self.linearize(state, state_n, eps, T, direction, scheme)
        if abs(lin.q) < SCHUR_SCALAR_TOL:
            raise SingularMatrixError(f"접선 분모가 0 입니다 ({lin.q:.3e})", float("inf"))
        return lin.zeta_inv - np.outer(lin.m, lin.zeta_inv @ lin.partials.d_sigma) / lin.q

    # ---------- 증분 적용 ----------

    def apply_increment(
        self,
        state: InternalState,
        state_n: InternalState,
        inc: StateIncrement,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        scheme: Optional[LocalScheme] = None,
    ) -> InternalState:
        """기법별 갱신 (소거된 변수는 재계산)"""
        ms = self.material
        scheme = scheme or self.scheme
        xi = state.xi + inc.d_xi
        d_xi_total = xi - state_n.xi
        if scheme == LocalScheme.NEWTON_RAPHSON:
            return state.evolve(
                xi=xi,
                eps_t=state.eps_t + inc.d_eps_t,
                S=state.S + inc.d_S,
                sigma=state.sigma + inc.d_sigma,
                direction=direction,
            )
        if scheme == LocalScheme.RADIAL_RETURN:
            eps_t = state.eps_t + inc.d_eps_t
            S = state.S + inc.d_S
        elif scheme == LocalScheme.CLOSEST_POINT:
            eps_t = state.eps_t + inc.d_eps_t
            S = state_n.S + ms.params.delta_S * d_xi_total
        else:
            lam = ms.transformation_tensor(state.sigma, state_n.reversal_eps_t, direction, self_accommodate=True)
            eps_t = state_n.eps_t + lam * d_xi_total
            S = state_n.S + ms.params.delta_S * d_xi_total
        return state.evolve(
            xi=xi,
            eps_t=eps_t,
            S=S,
            sigma=ms.elastic_stress(eps, T, eps_t, S),
            direction=direction,
        )

    @staticmethod
    def limit_to_bounds(state: InternalState, inc: StateIncrement) -> Tuple[StateIncrement, Optional[float]]:
        """ξ 가 [0,1] 을 넘으면 증분 전체를 축소해 한계에 맞춤"""
        target = state.xi + inc.d_xi
        if target > 1.0 and inc.d_xi > 0.0:
            return inc.scaled((1.0 - state.xi) / inc.d_xi), 1.0
        if target < 0.0 and inc.d_xi < 0.0:
            return inc.scaled(-state.xi / inc.d_xi), 0.0
        return inc, None

    def saturate(
        self,
        state: InternalState,
        state_n: InternalState,
        eps: np.ndarray,
        T: float,
        direction: TransformDirection,
        bound: float,
    ) -> Tuple[InternalState, int]:
        """ξ 를 한계에 고정하고 (εᵗ, S, σ) 만 Newton 으로 맞춘 뒤 방향 None"""
        ms = self.material
        d_xi = bound - state_n.xi
        S = state_n.S + ms.params.delta_S * d_xi
        current = state.evolve(xi=bound, S=S, sigma=ms.elastic_stress(eps, T, state.eps_t, S))
        p = ms.params
        for iteration in range(1, self.max_inner + 1):
            lam = ms.transformation_tensor(current.sigma, state_n.reversal_eps_t, direction, self_accommodate=True)
            h_eps_t = state_n.eps_t + lam * d_xi - current.eps_t
            h_sigma = ms.elastic_stress(eps, T, current.eps_t, current.S) - current.sigma
            norm = max(float(np.linalg.norm(h_eps_t)) / p.H, float(np.linalg.norm(h_sigma)) / p.E_A)
            if norm < self.e_H:
                break
            d_lambda = ms.d_lambda_d_sigma(current.sigma, direction, self_accommodate=True)
            a_matrix = d_lambda * d_xi
            compliance = ms.compliance(current.S)
            d_sigma = invert6(compliance + a_matrix) @ (compliance @ h_sigma - h_eps_t)
            current = current.evolve(
                eps_t=current.eps_t + a_matrix @ d_sigma + h_eps_t,
                sigma=current.sigma + d_sigma,
            )
        else:
            raise LocalConvergenceError("ξ 한계 포화 반복이 수렴하지 않았습니다", [norm], self.max_inner)

        reversal = current.eps_t.copy() if direction == TransformDirection.FORWARD else state_n.reversal_eps_t
        logger.debug(f"🔁 ξ={bound:g} 포화 처리 ({iteration}회)")
        return current.evolve(reversal_eps_t=reversal, direction=TransformDirection.NONE, saturated=True), iteration

    # ---------- 국부 해 ----------

    def resolve_local(
        self,
        state_n: InternalState,
        eps: np.ndarray,
        T: float,
        scheme: Optional[LocalScheme] = None,
    ) -> Tuple[InternalState, int]:
        """탄성 예측 → 방향 판정 → 정규화 잔차 < e_H 까지 δν 반복

        반환되는 반복 횟수는 적용된 국부 증분 수 (탄성이면 0).
        """
        scheme = scheme or self.scheme
        sigma_trial, phi_fwd, phi_rev = self.trial_elastic(state_n, eps, T)
        direction = self.detect_direction(phi_fwd, phi_rev, state_n.xi)
        if direction == TransformDirection.NONE:
            return state_n.evolve(sigma=sigma_trial, direction=direction, saturated=False), 0

        state = state_n.evolve(sigma=sigma_trial, direction=direction, saturated=False)
        residual = self.local_residual(state, state_n, eps, T, direction)
        norm = self.residual_norm(residual)
        history = [norm]
        damping = 1.0
        iterations = 0
        while norm >= self.e_H:
            if iterations >= self.max_inner:
                raise LocalConvergenceError(
                    f"국부 반복 {self.max_inner}회 내 미수렴 (‖H‖={norm:.3e})",
                    self.residual_blocks(residual),
                    iterations,
                )
            inc = self.delta_nu(state, state_n, residual, eps, T, direction, scheme).scaled(damping)
            inc, bound = self.limit_to_bounds(state, inc)
            state = self.apply_increment(state, state_n, inc, eps, T, direction, scheme)
            iterations += 1
            if bound is not None:
                state = state.evolve(xi=bound)
                if self.material.phi(bound, state.sigma, T, direction, state_n.reversal_eps_t) >= 0.0:
                    saturated, extra = self.saturate(state, state_n, eps, T, direction, bound)
                    return saturated, iterations + extra

            residual = self.local_residual(state, state_n, eps, T, direction)
            norm = self.residual_norm(residual)
            history.append(norm)
            logger.debug(f"🔁 국부 반복 {iterations}: ‖H‖={norm:.3e}")
            # 두 번 연속 증가하면 다음 증분을 절반으로
            growing = len(history) >= 3 and history[-1] > history[-2] > history[-3]
            damping = 0.5 if growing else 1.0

        return self.finalize(state, direction), iterations

    @staticmethod
    def finalize(state: InternalState, direction: TransformDirection) -> InternalState:
        """수렴 상태 정리 (ξ 범위 고정, 정변태면 역전점 기록 갱신)"""
        xi = min(max(state.xi, 0.0), 1.0)
        if direction == TransformDirection.FORWARD:
            return state.evolve(xi=xi, reversal_eps_t=state.eps_t.copy())
        return state.evolve(xi=xi)

"""
SMA 현상학적 구성 요소 (유효 물성, 변태 텐서, 구동력, 변태 함수)
"""
import logging
from typing import Optional, Tuple

import numpy as np

from app.config.materials import EXPONENTIAL_COMPLETION
from app.config.settings import SELF_ACCOMMODATION_REL
from app.domain.exceptions import MaterialError, ZeroEffectiveStressError, ZeroReversalStrainError
from app.domain.model.material_model import HardeningKind, MaterialParams, PhiPartials, TransformDirection
from app.domain.service.hardening_service import HardeningModel, build_hardening
from app.domain.service.voigt_service import ConstitutiveSpace, SOLID, invert6

logger = logging.getLogger(__name__)

_XI_TOL = 1e-12


def calibrate_material(
    E_A: float,
    E_M: float,
    nu: float,
    alpha: float,
    c: float,
    M_s: float,
    M_f: float,
    A_s: float,
    A_f: float,
    H: float,
    rho: float,
    T0: float,
    rho_ds0: float,
    hardening: HardeningKind = HardeningKind.QUADRATIC,
    smooth_exponents: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0),
) -> MaterialParams:
    """무응력 상태도 (M_s, M_f, A_s, A_f) 로 경화/문턱 상수 보정

    정변태: Φ(0,0,M_s)=0, Φ(1,0,M_f)=0 / 역변태: Φ(1,0,A_s)=0, Φ(0,0,A_f)=0.
    지수 모델은 끝점이 특이하므로 99% 완료 온도로 a_e 를 정하고 두 시작 조건만 만족시킨다.
    """
    if not (M_f < M_s < A_s < A_f):
        raise MaterialError(
            "변태 온도 순서는 M_f < M_s < A_s < A_f 여야 합니다",
            {"M_f": M_f, "M_s": M_s, "A_s": A_s, "A_f": A_f},
        )
    if E_A <= 0 or E_M <= 0 or H <= 0:
        raise MaterialError("E_A, E_M, H 는 양수여야 합니다", {"E_A": E_A, "E_M": E_M, "H": H})
    if rho_ds0 >= 0:
        raise MaterialError("ρΔs₀ 는 음수여야 합니다", {"rho_ds0": rho_ds0})
    if not -1.0 < nu < 0.5:
        raise MaterialError(f"비물리적 푸아송비: {nu}", {"nu": nu})

    kind = HardeningKind(hardening)
    rho_bM = -rho_ds0 * (M_s - M_f)
    rho_bA = -rho_ds0 * (A_f - A_s)
    a_cM = a_cA = a_eM = a_eA = 0.0

    if kind == HardeningKind.EXPONENTIAL:
        mu2 = 0.0
        energy_const = 0.5 * rho_ds0 * (M_s + A_s)
        Y = 0.5 * rho_ds0 * (M_s - A_s)
        a_eM = np.log(EXPONENTIAL_COMPLETION) / (M_s - M_f)
        a_eA = np.log(EXPONENTIAL_COMPLETION) / (A_s - A_f)
    else:
        mu2 = 0.25 * (rho_bA - rho_bM)
        energy_const = 0.5 * rho_ds0 * (M_s + A_f)
        Y = 0.5 * rho_ds0 * (M_s - A_f) - mu2
        if kind == HardeningKind.COSINE:
            a_cM = np.pi / (M_f - M_s)
            a_cA = np.pi / (A_s - A_f)

    if Y <= 0:
        raise MaterialError("보정된 변태 문턱 Y 가 양수가 아닙니다", {"Y": Y})

    params = MaterialParams(
        E_A=E_A, E_M=E_M, nu=nu, alpha=alpha, c=c,
        M_s=M_s, M_f=M_f, A_s=A_s, A_f=A_f,
        H=H, rho=rho, T0=T0, rho_ds0=rho_ds0,
        hardening=kind,
        smooth_exponents=tuple(float(n) for n in smooth_exponents),
        rho_bM=rho_bM, rho_bA=rho_bA, mu2=mu2, Y=Y, energy_const=energy_const,
        a_cM=float(a_cM), a_cA=float(a_cA), a_eM=float(a_eM), a_eA=float(a_eA),
    )
    logger.info(f"⚙️ 재료 보정 완료 - {kind.value}, Y={Y:.4e}, ρbᴹ={rho_bM:.4e}, ρbᴬ={rho_bA:.4e}")
    return params


class MaterialService:
    """보정된 재료 상수 위에서 구성 관계를 평가하는 서비스"""

    def __init__(self, params: MaterialParams, space: ConstitutiveSpace = SOLID):
        self.params = params
        self.space = space
        self.hardening_model: HardeningModel = build_hardening(params)
        self.shape = space.shape(params.nu)
        self.shape_inv = invert6(self.shape)
        self.thermal_vector = space.thermal(params.alpha)

    def with_space(self, space: ConstitutiveSpace) -> "MaterialService":
        return MaterialService(self.params, space)

    # ---------- 유효 물성 ----------

    def effective_properties(self, xi: float) -> Tuple[float, float]:
        """(S, ΔS), S = Sᴬ + ξΔS"""
        if xi < -_XI_TOL or xi > 1.0 + _XI_TOL:
            raise MaterialError(f"ξ 가 [0,1] 범위를 벗어났습니다: {xi}", {"xi": xi})
        p = self.params
        return p.S_A + xi * p.delta_S, p.delta_S

    def compliance(self, S: float) -> np.ndarray:
        """𝐒 = S𝔠"""
        return S * self.shape

    def stiffness(self, S: float) -> np.ndarray:
        """𝐒⁻¹"""
        return self.shape_inv / S

    def thermal_strain(self, T: float) -> np.ndarray:
        return self.thermal_vector * (T - self.params.T0)

    def elastic_stress(self, eps: np.ndarray, T: float, eps_t: np.ndarray, S: float) -> np.ndarray:
        """σ = 𝐒⁻¹(ε − α(T−T₀) − εᵗ)"""
        return self.shape_inv @ (eps - self.thermal_strain(T) - eps_t) / S

    # ---------- 경화 ----------

    def hardening(self, xi: float, direction: TransformDirection, clamp: bool = True) -> Tuple[float, float]:
        """(f, ∂f/∂ξ)"""
        return self.hardening_model.evaluate(xi, direction, clamp=clamp)

    # ---------- 변태 텐서 ----------

    @property
    def zero_stress(self) -> float:
        """무응력 판정 유효응력 (변태 응력 척도 Y/H 대비)"""
        return SELF_ACCOMMODATION_REL * self.params.Y / self.params.H

    @property
    def zero_strain(self) -> float:
        """역전점 기록이 없는 것으로 보는 유효 변형률 (H 대비)"""
        return SELF_ACCOMMODATION_REL * self.params.H

    def transformation_tensor(
        self,
        sigma: np.ndarray,
        reversal_eps_t: Optional[np.ndarray],
        direction: TransformDirection,
        self_accommodate: bool = False,
    ) -> np.ndarray:
        """흐름 법칙 Λ

        정변태 (3/2)H·σ_dev/σ_vM (변형률형), 역변태 H·εᵗ_r/εᵗ_r,eff.
        self_accommodate=True 이면 판정 값 아래에서 분모를 판정 값으로 고정해
        Λ 가 0 까지 연속으로 줄어든다 (자기수용 마르텐사이트).
        """
        H = self.params.H
        if direction == TransformDirection.FORWARD:
            s_eq = self.space.equivalent_stress(sigma)
            if s_eq < self.zero_stress and not self_accommodate:
                raise ZeroEffectiveStressError(
                    "유효응력이 0 이라 정변태 방향이 정의되지 않습니다",
                    {"sigma_vm": s_eq, "threshold": self.zero_stress},
                )
            return 1.5 * H * (self.space.mises_metric @ sigma) / max(s_eq, self.zero_stress)
        if direction == TransformDirection.REVERSE:
            if reversal_eps_t is None:
                if self_accommodate:
                    return np.zeros(self.space.size)
                raise ZeroReversalStrainError("역전점 변태변형률 기록이 없습니다")
            eff = self.space.effective_strain(reversal_eps_t)
            if eff < self.zero_strain and not self_accommodate:
                raise ZeroReversalStrainError(
                    "역전점 변태변형률이 0 이라 역변태 방향이 정의되지 않습니다",
                    {"eps_eff": eff, "threshold": self.zero_strain},
                )
            return H * np.asarray(reversal_eps_t, dtype=float) / max(eff, self.zero_strain)
        raise MaterialError("변태 방향 없이 Λ 를 평가할 수 없습니다")

    def d_lambda_d_sigma(self, sigma: np.ndarray, direction: TransformDirection, self_accommodate: bool = False) -> np.ndarray:
        """∂σΛ (정변태만 0 이 아님, 판정 값 이상에서 (∂σΛ)σ = 0)"""
        n = self.space.size
        if direction != TransformDirection.FORWARD:
            return np.zeros((n, n))
        s_eq = self.space.equivalent_stress(sigma)
        M = self.space.mises_metric
        if s_eq < self.zero_stress:
            if not self_accommodate:
                raise ZeroEffectiveStressError(
                    "유효응력이 0 이라 ∂σΛ 가 정의되지 않습니다",
                    {"sigma_vm": s_eq, "threshold": self.zero_stress},
                )
            return 1.5 * self.params.H / self.zero_stress * M
        m_sigma = M @ sigma
        return 1.5 * self.params.H / s_eq * (M - 1.5 * np.outer(m_sigma, m_sigma) / s_eq ** 2)

    # ---------- 구동력 / 변태 함수 ----------

    def driving_force(self, xi: float, sigma: np.ndarray, T: float, lam: np.ndarray, direction: TransformDirection) -> float:
        """Π = σ:Λ + ½σ:ΔS𝔠:σ + ρΔs₀T − (ρΔu₀+μ₁) − ∂f/∂ξ"""
        p = self.params
        _, df = self.hardening(xi, direction)
        return float(
            sigma @ lam
            + 0.5 * p.delta_S * (sigma @ self.shape @ sigma)
            + p.rho_ds0 * T
            - p.energy_const
            - df
        )

    def phi_and_partials(
        self,
        xi: float,
        sigma: np.ndarray,
        T: float,
        direction: TransformDirection,
        reversal_eps_t: Optional[np.ndarray] = None,
    ) -> PhiPartials:
        """Φ = ±Π − Y 와 (∂σΦ, ∂ξΦ, ∂TΦ)"""
        if direction == TransformDirection.NONE:
            raise MaterialError("변태 방향 없이 Φ 를 평가할 수 없습니다")
        p = self.params
        lam = self.transformation_tensor(sigma, reversal_eps_t, direction, self_accommodate=True)
        pi = self.driving_force(xi, sigma, T, lam, direction)
        curvature = self.hardening_model.curvature_at(xi, direction)
        grad = lam + p.delta_S * (self.shape @ sigma)
        if direction == TransformDirection.FORWARD and self.space.equivalent_stress(sigma) < self.zero_stress:
            # 판정 값 아래에서 σ:Λ 는 σ 의 2차식
            grad = grad + lam
        if direction == TransformDirection.FORWARD:
            return PhiPartials(phi=pi - p.Y, d_sigma=grad, d_xi=-curvature, d_T=p.rho_ds0, lam=lam, pi=pi)
        return PhiPartials(phi=-pi - p.Y, d_sigma=-grad, d_xi=curvature, d_T=-p.rho_ds0, lam=lam, pi=pi)

    def phi(self, xi: float, sigma: np.ndarray, T: float, direction: TransformDirection, reversal_eps_t=None) -> float:
        return self.phi_and_partials(xi, sigma, T, direction, reversal_eps_t).phi


def build_material_service(config, space: ConstitutiveSpace = SOLID) -> MaterialService:
    """MaterialConfig 블록으로 보정 후 서비스 생성"""
    params = calibrate_material(
        **config.constants(),
        hardening=config.hardening,
        smooth_exponents=tuple(config.smooth_exponents),
    )
    return MaterialService(params, space)

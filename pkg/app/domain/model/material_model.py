from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np


class TransformDirection(str, Enum):
    """변태 방향 (ξ̇ 부호)"""
    FORWARD = "forward"   # ξ̇ > 0
    REVERSE = "reverse"   # ξ̇ < 0
    NONE = "none"         # ξ̇ = 0 (탄성)


class HardeningKind(str, Enum):
    """경화 함수 모델"""
    QUADRATIC = "quadratic"
    COSINE = "cosine"
    EXPONENTIAL = "exponential"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class MaterialParams:
    """보정 완료된 SMA 재료 상수 (생성 후 불변)

    ρΔu₀와 μ₁은 무응력 상태도에서 분리되지 않으므로 energy_const 하나로 합쳐 보관한다.
    """
    E_A: float
    E_M: float
    nu: float
    alpha: float
    c: float
    M_s: float
    M_f: float
    A_s: float
    A_f: float
    H: float
    rho: float
    T0: float
    rho_ds0: float
    hardening: HardeningKind
    smooth_exponents: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    # 보정 결과
    rho_bM: float = 0.0
    rho_bA: float = 0.0
    mu2: float = 0.0
    Y: float = 0.0
    energy_const: float = 0.0   # ρΔu₀ + μ₁
    a_cM: float = 0.0
    a_cA: float = 0.0
    a_eM: float = 0.0
    a_eA: float = 0.0

    @property
    def S_A(self) -> float:
        return 1.0 / self.E_A

    @property
    def S_M(self) -> float:
        return 1.0 / self.E_M

    @property
    def delta_S(self) -> float:
        return self.S_M - self.S_A


@dataclass(frozen=True)
class PhiPartials:
    """변태 함수 값과 편미분"""
    phi: float
    d_sigma: np.ndarray   # ∂σΦ (변형률형)
    d_xi: float
    d_T: float
    lam: np.ndarray       # 평가에 쓰인 Λ
    pi: float

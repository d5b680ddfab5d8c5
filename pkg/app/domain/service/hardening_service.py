"""
변태 경화 함수 f(ξ)

모든 모델은 방향별 분기를 가지며 μ₂ 항까지 포함한다. μ₁ 은 ρΔu₀ 와 합쳐
MaterialParams.energy_const 로 구동력에 들어간다.
"""
import logging
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from app.config.settings import HARDENING_ENDPOINT_CLAMP
from app.domain.exceptions import HardeningSingularityError, MaterialError
from app.domain.model.material_model import HardeningKind, MaterialParams, TransformDirection

logger = logging.getLogger(__name__)

_XI_TOL = 1e-12


class HardeningModel(ABC):
    """경화 모델 기반 클래스"""

    # 끝점에서 도함수가 정의되지 않는 모델
    singular_endpoints: bool = False

    def __init__(self, name: str):
        self.name = name

    def _prepare(self, xi: float, clamp: bool) -> float:
        if xi < -_XI_TOL or xi > 1.0 + _XI_TOL:
            raise MaterialError(f"ξ 가 [0,1] 범위를 벗어났습니다: {xi}", {"xi": xi})
        xi = min(max(xi, 0.0), 1.0)
        if not self.singular_endpoints:
            return xi
        if clamp:
            return min(max(xi, HARDENING_ENDPOINT_CLAMP), 1.0 - HARDENING_ENDPOINT_CLAMP)
        if xi <= 0.0 or xi >= 1.0:
            raise HardeningSingularityError(f"{self.name} 모델은 ξ={xi} 에서 정의되지 않습니다", {"xi": xi})
        return xi

    def evaluate(self, xi: float, direction: TransformDirection, clamp: bool = True) -> Tuple[float, float]:
        """(f, ∂f/∂ξ)"""
        x = self._prepare(xi, clamp)
        return self.energy(x, direction), self.slope(x, direction)

    def curvature_at(self, xi: float, direction: TransformDirection, clamp: bool = True) -> float:
        """∂²f/∂ξ²"""
        return self.curvature(self._prepare(xi, clamp), direction)

    @abstractmethod
    def energy(self, xi: float, direction: TransformDirection) -> float:
        ...

    @abstractmethod
    def slope(self, xi: float, direction: TransformDirection) -> float:
        ...

    @abstractmethod
    def curvature(self, xi: float, direction: TransformDirection) -> float:
        ...


def _forward(direction: TransformDirection) -> bool:
    if direction == TransformDirection.NONE:
        raise MaterialError("경화 함수는 변태 방향이 있어야 평가됩니다")
    return direction == TransformDirection.FORWARD


class QuadraticHardening(HardeningModel):
    """2차 다항식 경화"""

    def __init__(self, rho_bM: float, rho_bA: float, mu2: float):
        super().__init__("quadratic")
        self.rho_bM = rho_bM
        self.rho_bA = rho_bA
        self.mu2 = mu2

    def energy(self, xi, direction):
        if _forward(direction):
            return 0.5 * self.rho_bM * xi ** 2 + self.mu2 * xi
        return 0.5 * self.rho_bA * xi ** 2 - self.mu2 * xi

    def slope(self, xi, direction):
        if _forward(direction):
            return self.rho_bM * xi + self.mu2
        return self.rho_bA * xi - self.mu2

    def curvature(self, xi, direction):
        return self.rho_bM if _forward(direction) else self.rho_bA


class CosineHardening(HardeningModel):
    """코사인 경화: ∂f/∂ξ = (ρΔs₀/a_c)[π − acos(2ξ−1)] ± μ₂"""

    singular_endpoints = True

    def __init__(self, rho_ds0: float, a_cM: float, a_cA: float, mu2: float):
        super().__init__("cosine")
        self.k_M = rho_ds0 / a_cM
        self.k_A = rho_ds0 / a_cA
        self.mu2 = mu2

    def _k(self, direction) -> Tuple[float, float]:
        return (self.k_M, self.mu2) if _forward(direction) else (self.k_A, -self.mu2)

    def energy(self, xi, direction):
        k, mu = self._k(direction)
        u = 2.0 * xi - 1.0
        integral = np.pi * xi - 0.5 * (u * np.arccos(u) - 2.0 * np.sqrt(xi * (1.0 - xi)) + np.pi)
        return float(k * integral + mu * xi)

    def slope(self, xi, direction):
        k, mu = self._k(direction)
        return float(k * (np.pi - np.arccos(2.0 * xi - 1.0)) + mu)

    def curvature(self, xi, direction):
        k, _ = self._k(direction)
        return float(k / np.sqrt(xi * (1.0 - xi)))


class ExponentialHardening(HardeningModel):
    """지수 경화 (정변태 ξ→1, 역변태 ξ→0 에서 발산)"""

    singular_endpoints = True

    def __init__(self, rho_ds0: float, a_eM: float, a_eA: float, mu2: float):
        super().__init__("exponential")
        self.k_M = rho_ds0 / a_eM
        self.k_A = rho_ds0 / a_eA
        self.mu2 = mu2

    def energy(self, xi, direction):
        if _forward(direction):
            return float(self.k_M * ((1.0 - xi) * np.log(1.0 - xi) + xi) + self.mu2 * xi)
        return float(-self.k_A * (xi * np.log(xi) - xi) - self.mu2 * xi)

    def slope(self, xi, direction):
        if _forward(direction):
            return float(-self.k_M * np.log(1.0 - xi) + self.mu2)
        return float(-self.k_A * np.log(xi) - self.mu2)

    def curvature(self, xi, direction):
        if _forward(direction):
            return float(self.k_M / (1.0 - xi))
        return float(-self.k_A / xi)


class SmoothHardening(HardeningModel):
    """매끄러운 경화 (n₁..n₄ = 1 이면 2차 모델과 같다)"""

    def __init__(self, rho_bM: float, rho_bA: float, mu2: float, exponents: Tuple[float, float, float, float]):
        super().__init__("smooth")
        if min(exponents) < 1.0:
            raise MaterialError("smooth 지수는 1 이상이어야 합니다", {"exponents": list(exponents)})
        self.rho_bM = rho_bM
        self.rho_bA = rho_bA
        self.mu2 = mu2
        self.n1, self.n2, self.n3, self.n4 = exponents

    def _branch(self, direction):
        if _forward(direction):
            return self.rho_bM, self.n1, self.n2, self.mu2
        return self.rho_bA, self.n3, self.n4, -self.mu2

    def energy(self, xi, direction):
        b, na, nb, mu = self._branch(direction)
        # f(0) = 0 이 되도록 상수항 제거
        bracket = xi + xi ** (na + 1) / (na + 1) + ((1.0 - xi) ** (nb + 1) - 1.0) / (nb + 1)
        return 0.5 * b * bracket + mu * xi

    def slope(self, xi, direction):
        b, na, nb, mu = self._branch(direction)
        return 0.5 * b * (1.0 + xi ** na - (1.0 - xi) ** nb) + mu

    def curvature(self, xi, direction):
        b, na, nb, _ = self._branch(direction)
        return 0.5 * b * (na * xi ** (na - 1) + nb * (1.0 - xi) ** (nb - 1))


def build_hardening(params: MaterialParams) -> HardeningModel:
    """보정된 상수로 경화 모델 생성"""
    kind = params.hardening
    if kind == HardeningKind.QUADRATIC:
        return QuadraticHardening(params.rho_bM, params.rho_bA, params.mu2)
    if kind == HardeningKind.COSINE:
        return CosineHardening(params.rho_ds0, params.a_cM, params.a_cA, params.mu2)
    if kind == HardeningKind.EXPONENTIAL:
        return ExponentialHardening(params.rho_ds0, params.a_eM, params.a_eA, params.mu2)
    if kind == HardeningKind.SMOOTH:
        return SmoothHardening(params.rho_bM, params.rho_bA, params.mu2, params.smooth_exponents)
    raise MaterialError(f"알 수 없는 경화 모델: {kind}")

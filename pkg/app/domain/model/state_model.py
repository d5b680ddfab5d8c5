from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from app.domain.model.material_model import TransformDirection


class LocalScheme(str, Enum):
    """내부상태 갱신 기법"""
    NEWTON_RAPHSON = "newton_raphson"
    RADIAL_RETURN = "radial_return"
    CLOSEST_POINT = "closest_point"
    CUTTING_PLANE = "cutting_plane"


class SolverStrategy(str, Enum):
    """전역-국부 연성 해법"""
    RETURN_MAPPING = "return_mapping"
    PARALLEL_PROJECTION = "parallel_projection"


@dataclass(frozen=True)
class InternalState:
    """가우스점 내부상태 ν = (ξ, εᵗ, S, σ) + 역전점 기록"""
    xi: float
    eps_t: np.ndarray
    S: float
    sigma: np.ndarray
    reversal_eps_t: np.ndarray
    direction: TransformDirection = TransformDirection.NONE
    saturated: bool = False   # ξ 한계 도달 후 ξ 고정 상태로 마친 스텝

    def evolve(self, **changes) -> "InternalState":
        return replace(self, **changes)

    @classmethod
    def initial(cls, size: int, S: float, xi: float = 0.0, eps_t: np.ndarray = None) -> "InternalState":
        eps_t = np.zeros(size) if eps_t is None else np.asarray(eps_t, dtype=float)
        return cls(
            xi=xi,
            eps_t=eps_t,
            S=S,
            sigma=np.zeros(size),
            reversal_eps_t=eps_t.copy(),
        )


@dataclass(frozen=True)
class LocalResidual:
    """국부 잔차 H = (H_Φ, H_εt, H_S, H_σ)"""
    h_phi: float
    h_eps_t: np.ndarray
    h_S: float
    h_sigma: np.ndarray

    def normalized(self, Y: float, H: float, delta_S: float, E_A: float) -> Tuple[float, float, float, float]:
        """블록별 무차원 크기"""
        return (
            abs(self.h_phi) / Y,
            float(np.linalg.norm(self.h_eps_t)) / H,
            abs(self.h_S) / abs(delta_S),
            float(np.linalg.norm(self.h_sigma)) / E_A,
        )

    def norm(self, Y: float, H: float, delta_S: float, E_A: float) -> float:
        return max(self.normalized(Y, H, delta_S, E_A))

    def without(self, eps_t: bool = False, S: bool = False, sigma: bool = False) -> "LocalResidual":
        """소거된 블록을 0으로 둔 잔차"""
        return LocalResidual(
            h_phi=self.h_phi,
            h_eps_t=np.zeros_like(self.h_eps_t) if eps_t else self.h_eps_t,
            h_S=0.0 if S else self.h_S,
            h_sigma=np.zeros_like(self.h_sigma) if sigma else self.h_sigma,
        )

    @classmethod
    def zero(cls, size: int) -> "LocalResidual":
        return cls(0.0, np.zeros(size), 0.0, np.zeros(size))


@dataclass(frozen=True)
class StateIncrement:
    """국부 증분 δν"""
    d_xi: float
    d_eps_t: np.ndarray
    d_S: float
    d_sigma: np.ndarray

    def scaled(self, factor: float) -> "StateIncrement":
        return StateIncrement(
            self.d_xi * factor, self.d_eps_t * factor, self.d_S * factor, self.d_sigma * factor
        )

    def __add__(self, other: "StateIncrement") -> "StateIncrement":
        return StateIncrement(
            self.d_xi + other.d_xi,
            self.d_eps_t + other.d_eps_t,
            self.d_S + other.d_S,
            self.d_sigma + other.d_sigma,
        )

    def as_vector(self) -> np.ndarray:
        """(δξ, δεᵗ, δS, δσ) 순서의 평탄 벡터"""
        return np.concatenate(([self.d_xi], self.d_eps_t, [self.d_S], self.d_sigma))

    @classmethod
    def zero(cls, size: int) -> "StateIncrement":
        return cls(0.0, np.zeros(size), 0.0, np.zeros(size))


@dataclass
class GlobalState:
    """전역 미지수: 절점 변위와 구속 dof 반력, 가우스점 내부상태"""
    d: np.ndarray
    reactions: np.ndarray
    states: List[InternalState]
    T: float
    load: float


@dataclass
class StepOutcome:
    """한 하중 스텝의 수렴 기록"""
    outer_iterations: int = 0
    local_updates: int = 0
    residual_history: List[float] = field(default_factory=list)
    converged: bool = False
    convergence_order: Optional[float] = None
    wall_time: float = 0.0
    min_dissipation: float = 0.0
    reaction_balance: float = 0.0
    substeps: int = 1

    def merge(self, other: "StepOutcome") -> "StepOutcome":
        """분할된 하위 스텝 기록 합치기"""
        return StepOutcome(
            outer_iterations=self.outer_iterations + other.outer_iterations,
            local_updates=self.local_updates + other.local_updates,
            residual_history=self.residual_history + other.residual_history,
            converged=self.converged and other.converged,
            convergence_order=other.convergence_order,
            wall_time=self.wall_time + other.wall_time,
            min_dissipation=min(self.min_dissipation, other.min_dissipation),
            reaction_balance=other.reaction_balance,
            substeps=self.substeps + other.substeps,
        )

"""
Voigt 표기 텐서 대수

순서는 (xx, yy, zz, yz, xz, xy) 로 고정한다. 변형률형 벡터는 공학 전단(γ = 2ε)을 저장하므로
응력·변형률 이중 축약은 단순 내적이고, 응력·응력 축약은 가중치 (1,1,1,2,2,2) 를 쓴다.
"""
import logging
from abc import ABC, abstractmethod

import numpy as np

from app.config.settings import SINGULAR_COND_LIMIT
from app.domain.exceptions import MaterialError, SingularMatrixError
from app.domain.model.mesh_model import ElementKind

logger = logging.getLogger(__name__)

VOIGT_ORDER = ("xx", "yy", "zz", "yz", "xz", "xy")
STRESS_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
HYDROSTATIC = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

_DEV_PROJECTOR = np.eye(6) - np.outer(HYDROSTATIC, HYDROSTATIC) / 3.0
_SHEAR_INDEX = {3: (1, 2), 4: (0, 2), 5: (0, 1)}


def deviatoric(s: np.ndarray) -> np.ndarray:
    """수직 성분에서 정수압 성분 제거 (전단 성분 유지)"""
    s = np.asarray(s, dtype=float)
    return s - HYDROSTATIC * (s[:3].sum() / 3.0)


def stress_contract(a: np.ndarray, b: np.ndarray) -> float:
    """응력형 벡터끼리의 이중 축약 a:b"""
    return float(np.dot(a * STRESS_WEIGHTS, b))


def von_mises(s: np.ndarray) -> float:
    """유효 (von Mises) 응력 √(3/2 s_dev:s_dev)"""
    dev = deviatoric(s)
    return float(np.sqrt(max(1.5 * stress_contract(dev, dev), 0.0)))


def effective_strain(e: np.ndarray) -> float:
    """공학 전단 변형률 벡터의 유효값 √(2/3 ε:ε)"""
    e = np.asarray(e, dtype=float)
    return float(np.sqrt(2.0 / 3.0 * (np.dot(e[:3], e[:3]) + 0.5 * np.dot(e[3:], e[3:]))))


def compliance_shape(nu: float) -> np.ndarray:
    """무차원 컴플라이언스 형상 행렬 𝔠 (전단 대각 2(1+υ))"""
    if not -1.0 < nu < 0.5:
        raise MaterialError(f"비물리적 푸아송비: {nu}", {"nu": nu})
    shape = np.zeros((6, 6))
    shape[:3, :3] = -nu
    np.fill_diagonal(shape[:3, :3], 1.0)
    shape[3:, 3:] = np.eye(3) * 2.0 * (1.0 + nu)
    return shape


def compliance_matrix(S: float, nu: float) -> np.ndarray:
    """등방 컴플라이언스 𝐒 = S·𝔠"""
    if S <= 0.0:
        raise MaterialError(f"컴플라이언스는 양수여야 합니다: {S}", {"S": S})
    return S * compliance_shape(nu)


def invert6(m: np.ndarray) -> np.ndarray:
    """작은 정방행렬 역행렬 (부분 피벗 LU), 특이하면 조건수와 함께 예외"""
    m = np.asarray(m, dtype=float)
    cond = float(np.linalg.cond(m))
    if not np.isfinite(cond) or cond > SINGULAR_COND_LIMIT:
        raise SingularMatrixError(f"특이 행렬 (조건수 {cond:.3e})", cond)
    return np.linalg.solve(m, np.eye(m.shape[0]))


def to_tensor(v: np.ndarray, strain_like: bool = False) -> np.ndarray:
    """Voigt 6-벡터 → 3×3 대칭 텐서 (변형률형이면 전단을 반으로)"""
    t = np.diag(np.asarray(v[:3], dtype=float))
    factor = 0.5 if strain_like else 1.0
    for k, (i, j) in _SHEAR_INDEX.items():
        t[i, j] = t[j, i] = v[k] * factor
    return t


class ConstitutiveSpace(ABC):
    """구성 방정식이 사는 Voigt 부분공간

    mises_metric M 은 σ_vM² = 3/2 σᵀMσ 를, strain_metric N 은 ε_eff² = 2/3 εᵀNε 를 정의한다.
    """

    name: str = ""
    size: int = 0

    @property
    @abstractmethod
    def mises_metric(self) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def strain_metric(self) -> np.ndarray:
        ...

    @abstractmethod
    def shape(self, nu: float) -> np.ndarray:
        """컴플라이언스 형상 𝔠"""

    @abstractmethod
    def thermal(self, alpha: float) -> np.ndarray:
        """열팽창 벡터 α"""

    @abstractmethod
    def to_voigt6_stress(self, v: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def to_voigt6_transformation_strain(self, v: np.ndarray) -> np.ndarray:
        ...

    def equivalent_stress(self, sigma: np.ndarray) -> float:
        return float(np.sqrt(max(1.5 * sigma @ self.mises_metric @ sigma, 0.0)))

    def effective_strain(self, e: np.ndarray) -> float:
        return float(np.sqrt(max(2.0 / 3.0 * e @ self.strain_metric @ e, 0.0)))


class SolidSpace(ConstitutiveSpace):
    """3차원 6성분 공간 (hex8)"""

    name = "solid"
    size = 6

    def __init__(self):
        self._mises = _DEV_PROJECTOR @ np.diag(STRESS_WEIGHTS) @ _DEV_PROJECTOR
        self._strain = np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])

    @property
    def mises_metric(self) -> np.ndarray:
        return self._mises

    @property
    def strain_metric(self) -> np.ndarray:
        return self._strain

    def shape(self, nu: float) -> np.ndarray:
        return compliance_shape(nu)

    def thermal(self, alpha: float) -> np.ndarray:
        return alpha * HYDROSTATIC

    def to_voigt6_stress(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float)

    def to_voigt6_transformation_strain(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float)


class UniaxialSpace(ConstitutiveSpace):
    """1성분 단축응력 공간 (bar1d)

    σ = (σ,0,0,0,0,0) 조건으로 횡방향 성분을 해석적으로 응축했다. 변태변형률의 횡성분은 −½εᵗ_xx.
    """

    name = "uniaxial"
    size = 1

    def __init__(self):
        # 6성분 공간의 M[0,0], N 의 단축 변태변형률 방향 (1, −½, −½) 축약
        self._mises = np.array([[2.0 / 3.0]])
        self._strain = np.array([[1.5]])

    @property
    def mises_metric(self) -> np.ndarray:
        return self._mises

    @property
    def strain_metric(self) -> np.ndarray:
        return self._strain

    def shape(self, nu: float) -> np.ndarray:
        compliance_shape(nu)
        return np.array([[1.0]])

    def thermal(self, alpha: float) -> np.ndarray:
        return np.array([alpha])

    def to_voigt6_stress(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(6)
        out[0] = v[0]
        return out

    def to_voigt6_transformation_strain(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(6)
        out[:3] = v[0] * np.array([1.0, -0.5, -0.5])
        return out


SOLID = SolidSpace()
UNIAXIAL = UniaxialSpace()


def space_for(kind: ElementKind) -> ConstitutiveSpace:
    """요소 종류에 맞는 구성 공간"""
    return UNIAXIAL if kind == ElementKind.BAR1D else SOLID

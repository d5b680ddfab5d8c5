"""
SMA 해석기 도메인 예외
"""
import math
from typing import Any, Dict, List, Optional


class SmaSolverError(Exception):
    """해석기 공통 예외"""

    exit_code = 1

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def to_record(self) -> Dict[str, Any]:
        """기계 판독용 에러 레코드"""
        return {"error": type(self).__name__, "message": self.message, "detail": _finite(self.detail)}


class ConfigError(SmaSolverError):
    """설정 파일 파싱/검증 실패"""

    def __init__(self, message: str, errors: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message, {"errors": errors or []})


class MaterialError(SmaSolverError):
    """비물리적 재료 상수 또는 정의역 밖 상태"""


class HardeningSingularityError(MaterialError):
    """경화 함수 끝점 특이점 (ξ ∈ {0, 1})"""


class ZeroEffectiveStressError(MaterialError):
    """정변태 방향 정의 불가 (유효응력 0)"""


class ZeroReversalStrainError(MaterialError):
    """역변태 방향 정의 불가 (역전점 변태변형률 0)"""


class SingularMatrixError(SmaSolverError):
    """특이 행렬 (조건수 포함)"""

    def __init__(self, message: str, condition: float):
        super().__init__(message, {"condition": condition})
        self.condition = condition


class MeshError(SmaSolverError):
    """메쉬 연결성/경계조건 오류"""


class LocalConvergenceError(SmaSolverError):
    """가우스점 국부 반복 미수렴"""

    exit_code = 2

    def __init__(self, message: str, residual_blocks: List[float], iterations: int):
        super().__init__(message, {"residual_blocks": residual_blocks, "iterations": iterations})
        self.residual_blocks = residual_blocks
        self.iterations = iterations


class GlobalConvergenceError(SmaSolverError):
    """전역 평형 반복 미수렴"""

    exit_code = 2

    def __init__(self, message: str, step_index: int, residual_history: List[float]):
        super().__init__(message, {"step": step_index, "residual_history": residual_history})
        self.step_index = step_index
        self.residual_history = residual_history


def _finite(value: Any) -> Any:
    """JSON 직렬화를 위해 inf/nan 을 None 으로"""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value

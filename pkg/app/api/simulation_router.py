import logging

from fastapi import APIRouter, HTTPException, Query

from app.config.materials import get_material_info
from app.domain.controller.simulation_controller import SimulationController
from app.domain.exceptions import ConfigError, MaterialError, MeshError, SmaSolverError
from app.domain.schema.sim_schema import SimConfig, SimulationRunResponse, VerifyReport

logger = logging.getLogger(__name__)
router = APIRouter()


def _to_http(e: SmaSolverError) -> HTTPException:
    """도메인 예외 → HTTP 오류 (입력 문제 422, 해석 실패 500)"""
    status = 422 if isinstance(e, (ConfigError, MaterialError, MeshError)) else 500
    return HTTPException(status_code=status, detail=e.to_record())


# ========== 상태 확인 ==========

@router.get("/health")
async def health_check():
    """💚 헬스체크"""
    return {"status": "healthy", "service": "sma_solver"}


@router.get("/simulation/materials")
async def get_materials():
    """🧪 재료 프리셋 목록"""
    logger.info("🤍1. 재료 프리셋 라우터 진입")
    return get_material_info()


# ========== 해석 ==========

@router.post("/simulation/run", response_model=SimulationRunResponse)
def run_simulation(config: SimConfig):
    """🔥 하중 경로 해석 실행 (파일 출력 없이 결과 반환)"""
    logger.info(f"🤍1. 해석 라우터 진입: {config.name}")
    try:
        result = SimulationController(config).run(write=False)
        logger.info("🤍2. 해석 라우터 - 컨트롤러 호출 완료")
        return result
    except SmaSolverError as e:
        logger.error(f"❌ 해석 라우터 에러 ({type(e).__name__}): {e.message}")
        raise _to_http(e)


@router.post("/simulation/verify", response_model=VerifyReport)
def run_verification(quick: bool = Query(True, description="3D 전역 비교와 차수 적합 생략")):
    """🔬 검증 스위트 실행"""
    logger.info(f"🤍1. 검증 라우터 진입 (quick={quick})")
    try:
        return SimulationController.verify(quick=quick)
    except SmaSolverError as e:
        logger.error(f"❌ 검증 라우터 에러: {e.message}")
        raise _to_http(e)

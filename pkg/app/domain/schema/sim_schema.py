from math import ceil
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config.materials import DEFAULT_PRESET, DEFAULT_SMOOTH_EXPONENTS, get_material_preset, get_preset_names
from app.config.settings import E_H, E_R, MAX_HALVINGS, MAX_INNER, MAX_OUTER, OUTPUT_DIR
from app.domain.model.material_model import HardeningKind
from app.domain.model.mesh_model import ElementKind
from app.domain.model.state_model import LocalScheme, SolverStrategy

MATERIAL_KEYS = ("E_A", "E_M", "nu", "alpha", "c", "A_s", "A_f", "M_s", "M_f", "H", "rho", "T0", "rho_ds0")


# ========== 입력 설정 ==========

class MaterialConfig(BaseModel):
    """재료 블록 (프리셋 + 개별 값 덮어쓰기)"""
    preset: Optional[str] = Field(DEFAULT_PRESET, description="물성 프리셋 이름", examples=["NiTi50"])
    E_A: float = Field(..., gt=0, description="오스테나이트 영률 (Pa)", examples=[32.5e9])
    E_M: float = Field(..., gt=0, description="마르텐사이트 영률 (Pa)", examples=[23.0e9])
    nu: float = Field(..., description="푸아송비", examples=[0.33])
    alpha: float = Field(..., description="열팽창계수 (1/K)", examples=[22.0e-6])
    c: float = Field(..., description="비열 (J/kgK)", examples=[400.0])
    A_s: float = Field(..., description="역변태 시작 온도 (K)", examples=[241.0])
    A_f: float = Field(..., description="역변태 종료 온도 (K)", examples=[290.0])
    M_s: float = Field(..., description="정변태 시작 온도 (K)", examples=[226.0])
    M_f: float = Field(..., description="정변태 종료 온도 (K)", examples=[194.0])
    H: float = Field(..., gt=0, description="최대 변태변형률", examples=[0.033])
    rho: float = Field(..., gt=0, description="밀도 (kg/m^3)", examples=[6500.0])
    T0: float = Field(..., description="기준 온도 (K)", examples=[300.0])
    rho_ds0: float = Field(..., lt=0, description="엔트로피 차 ρΔs₀ (J/m^3K)", examples=[-11.55e4])
    hardening: HardeningKind = Field(HardeningKind.QUADRATIC, description="경화 모델")
    smooth_exponents: List[float] = Field(
        default_factory=lambda: list(DEFAULT_SMOOTH_EXPONENTS),
        min_length=4, max_length=4,
        description="smooth 모델 지수 n₁..n₄",
    )

    @model_validator(mode="before")
    @classmethod
    def merge_preset(cls, data):
        if not isinstance(data, dict):
            return data
        name = data.get("preset", DEFAULT_PRESET)
        if name is None:
            return data
        preset = get_material_preset(name)
        if preset is None:
            raise ValueError(f"알 수 없는 재료 프리셋: {name} (가능: {', '.join(get_preset_names())})")
        merged = {**preset, **{k: v for k, v in data.items() if v is not None}}
        merged.setdefault("preset", name)
        return merged

    @field_validator("nu")
    @classmethod
    def check_nu(cls, v: float) -> float:
        if not -1.0 < v < 0.5:
            raise ValueError(f"비물리적 푸아송비: {v}")
        return v

    @model_validator(mode="after")
    def check_temperatures(self):
        if not (self.M_f < self.M_s < self.A_s < self.A_f):
            raise ValueError("변태 온도 순서는 M_f < M_s < A_s < A_f 여야 합니다")
        return self

    def constants(self) -> Dict[str, float]:
        return {key: getattr(self, key) for key in MATERIAL_KEYS}


class GeometryConfig(BaseModel):
    """형상 블록 (SI)"""
    kind: ElementKind = Field(ElementKind.BAR1D, description="요소 종류")
    length: float = Field(1.0, gt=0, description="봉 길이 (m, bar1d)")
    n_elements: int = Field(10, ge=1, description="봉 요소 수 (bar1d)")
    area: float = Field(0.1, gt=0, description="봉 단면적 (m², bar1d)")
    size: List[float] = Field(
        default_factory=lambda: [0.2, 2.0, 0.2], min_length=3, max_length=3,
        description="박스 크기 (lx, ly, lz) m, 봉 축은 y (hex8)",
    )
    divisions: List[int] = Field(
        default_factory=lambda: [2, 10, 2], min_length=3, max_length=3,
        description="박스 분할 수 (hex8)",
    )
    load_kind: Literal["traction", "force"] = Field(
        "traction", description="hex8 하중 배율 해석: 면 하중 (Pa) 또는 총 하중 (N)"
    )


class LoadSegment(BaseModel):
    """하중 경로 구간 (현재 값 → 끝 값 선형)"""
    T_end: float = Field(..., description="구간 끝 온도 (K)", examples=[180.0])
    load_end: float = Field(0.0, description="구간 끝 하중 배율 (N 또는 Pa)")
    steps: Optional[int] = Field(None, ge=1, description="스텝 수")
    dT: Optional[float] = Field(None, gt=0, description="온도 스텝 크기 (K)")
    dF: Optional[float] = Field(None, gt=0, description="하중 스텝 크기")

    def step_count(self, T_from: float, F_from: float) -> int:
        if self.steps is not None:
            return self.steps
        counts = [1]
        if self.dT is not None:
            counts.append(ceil(abs(self.T_end - T_from) / self.dT - 1e-9))
        if self.dF is not None:
            counts.append(ceil(abs(self.load_end - F_from) / self.dF - 1e-9))
        return max(counts)


class LoadPathConfig(BaseModel):
    """의사 시간 하중 경로"""
    T_start: float = Field(..., description="초기 온도 (K)", examples=[300.0])
    load_start: float = Field(0.0, description="초기 하중 배율")
    xi_start: float = Field(0.0, ge=0.0, le=1.0, description="초기 마르텐사이트 분율")
    segments: List[LoadSegment] = Field(..., min_length=1)

    def expand(self) -> List[Tuple[float, float]]:
        """스텝별 (T, 하중) 목록 (구간 끝 값은 정확히 일치)"""
        points = []
        T_prev, F_prev = self.T_start, self.load_start
        for seg in self.segments:
            n = seg.step_count(T_prev, F_prev)
            for i in range(1, n + 1):
                t = i / n
                points.append((T_prev + (seg.T_end - T_prev) * t, F_prev + (seg.load_end - F_prev) * t))
            T_prev, F_prev = seg.T_end, seg.load_end
        return points

    def with_step(self, dT: Optional[float] = None, dF: Optional[float] = None) -> "LoadPathConfig":
        """모든 구간의 스텝 크기를 바꾼 사본"""
        segments = []
        for seg in self.segments:
            segments.append(seg.model_copy(update={
                "steps": None if (dT is not None or dF is not None) else seg.steps,
                "dT": dT if dT is not None else seg.dT,
                "dF": dF if dF is not None else seg.dF,
            }))
        return self.model_copy(update={"segments": segments})


class SolverConfig(BaseModel):
    """해법 블록"""
    strategy: SolverStrategy = Field(SolverStrategy.PARALLEL_PROJECTION, description="전역-국부 연성 해법")
    scheme: LocalScheme = Field(LocalScheme.CLOSEST_POINT, description="국부 갱신 기법")
    e_R: float = Field(E_R, gt=0, description="전역 잔차 허용오차 (정규화)")
    e_H: float = Field(E_H, gt=0, description="국부 잔차 허용오차 (정규화)")
    max_outer: int = Field(MAX_OUTER, ge=1, description="전역 반복 최대 횟수")
    max_inner: int = Field(MAX_INNER, ge=1, description="국부 반복 최대 횟수")
    auto_halving: bool = Field(False, description="스텝 실패 시 자동 절반 분할")
    max_halvings: int = Field(MAX_HALVINGS, ge=0, description="자동 분할 최대 깊이")


class OutputConfig(BaseModel):
    """출력 블록"""
    directory: str = Field(OUTPUT_DIR, description="결과 디렉터리")
    results_file: str = Field("results.csv", description="결과 표 파일명")
    summary_file: str = Field("summary.json", description="실행 요약 파일명")
    probe_point: Optional[List[float]] = Field(None, description="관측점 좌표 (기본: 최대 모서리)")
    record_wall_time: bool = Field(False, description="결과 표에 스텝 wall time 기록 (비결정적)")


class BenchConfig(BaseModel):
    """벤치 블록"""
    strategies: List[SolverStrategy] = Field(
        default_factory=lambda: [SolverStrategy.RETURN_MAPPING, SolverStrategy.PARALLEL_PROJECTION]
    )
    schemes: List[LocalScheme] = Field(default_factory=lambda: [LocalScheme.CLOSEST_POINT])
    mesh_sweep: List[List[int]] = Field(default_factory=list, description="hex8 분할 목록")
    step_grid_T: List[float] = Field(default_factory=list, description="최대 온도 스텝 탐색 격자 (K)")
    step_grid_F: List[float] = Field(default_factory=list, description="최대 하중 스텝 탐색 격자")
    search_path: Optional[LoadPathConfig] = Field(None, description="최대 스텝 탐색용 경로 (기본: load_path)")


class SimConfig(BaseModel):
    """시뮬레이션 설정 전체"""
    name: str = Field("simulation", description="실행 이름")
    material: MaterialConfig = Field(default_factory=MaterialConfig)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    load_path: LoadPathConfig
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)


# ========== 결과 ==========

class ResultRow(BaseModel):
    """수렴 스텝 하나의 관측값"""
    step: int
    time: float
    T: float
    load: float
    probe_u: float
    sigma_xx: float
    sigma_yy: float
    sigma_zz: float
    sigma_yz: float
    sigma_xz: float
    sigma_xy: float
    xi: float
    eps_t_xx: float
    eps_t_yy: float
    eps_t_zz: float
    eps_t_yz: float
    eps_t_xz: float
    eps_t_xy: float
    outer_iterations: int
    local_updates: int
    wall_time: Optional[float] = None


class StepReport(BaseModel):
    step: int
    T: float
    load: float
    outer_iterations: int
    local_updates: int
    residual_history: List[float]
    converged: bool
    convergence_order: Optional[float] = None
    substeps: int = 1
    min_dissipation: float = 0.0
    reaction_balance: float = 0.0


class SolveReport(BaseModel):
    """실행 요약"""
    name: str
    strategy: SolverStrategy
    scheme: LocalScheme
    total_steps: int
    total_outer_iterations: int
    total_local_updates: int
    converged: bool
    wall_time: float
    max_reaction_balance: float
    min_dissipation: float
    steps: List[StepReport] = Field(default_factory=list)


class MaxStepResult(BaseModel):
    variable: Literal["T", "F"]
    max_step: Optional[float]
    failed: bool
    non_monotone: bool
    saturated: bool = Field(False, description="격자 최대값까지 수렴 (한계 미확인, max_step 은 하한)")
    attempts: Dict[str, bool] = Field(default_factory=dict)


class BenchEntry(BaseModel):
    strategy: SolverStrategy
    scheme: LocalScheme
    divisions: Optional[List[int]] = None
    total_outer_iterations: int = 0
    total_local_updates: int = 0
    wall_time: float = 0.0
    converged: bool = False
    max_step_T: Optional[MaxStepResult] = None
    max_step_F: Optional[MaxStepResult] = None


class BenchReport(BaseModel):
    name: str
    entries: List[BenchEntry]
    ratios: Dict[str, float] = Field(default_factory=dict, description="PP/RM 비율")


class VerifyCheck(BaseModel):
    name: str
    passed: bool
    measured: Optional[float] = None
    threshold: float
    detail: str = ""


class VerifyReport(BaseModel):
    passed: bool
    checks: List[VerifyCheck]


class SimulationRunResponse(BaseModel):
    """POST /simulation/run 응답"""
    summary: SolveReport
    rows: List[ResultRow]

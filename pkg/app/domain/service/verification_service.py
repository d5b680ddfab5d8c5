"""
독립 검증 오라클

1D 해석해, 오차 척도, 중심차분 검사, 국부 야코비안 조밀 해, 수렴 차수 적합과
이들을 묶은 검증 스위트.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from app.domain.exceptions import MaterialError, SingularMatrixError, SmaSolverError
from app.domain.model.material_model import HardeningKind, MaterialParams, TransformDirection
from app.domain.model.mesh_model import ElementKind, Mesh, Probe
from app.domain.model.state_model import InternalState, LocalScheme, SolverStrategy, StateIncrement
from app.domain.schema.sim_schema import LoadPathConfig, LoadSegment, MaterialConfig, SolverConfig, VerifyCheck, VerifyReport
from app.domain.service.assembly_service import AssemblyService
from app.domain.service.local_update_service import LocalUpdateService
from app.domain.service.material_service import MaterialService, build_material_service
from app.domain.service.mesh_service import build_bar_mesh, build_box_mesh, default_probe_point, nearest_node
from app.domain.service.solver_service import SolverService
from app.domain.service.voigt_service import SOLID, UNIAXIAL, ConstitutiveSpace, deviatoric

logger = logging.getLogger(__name__)

DEFAULT_LADDER = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
ORDER_STEPS = (0.05, 0.1, 0.2, 0.4)
ORDER_REFERENCE_STEP = 0.00625
ERROR_FLOOR = 1e-10
MESH_SWEEP = (1, 2, 4, 8, 16)


# ========== 1D 해석해 ==========

@dataclass(frozen=True)
class AnalyticPoint:
    T: float
    sigma: float
    xi: float
    eps_t: float


def analytic_1d(sigma: float, T: float, params: MaterialParams, direction: TransformDirection) -> Tuple[float, float]:
    """2차 경화 모델의 단축 변태면 위 (ξ, εᵗ)"""
    if params.hardening != HardeningKind.QUADRATIC:
        raise MaterialError("1D 해석해는 2차 경화 모델에서만 정의됩니다", {"hardening": params.hardening.value})
    p = params
    base = abs(sigma) * p.H + 0.5 * p.delta_S * sigma ** 2
    if direction == TransformDirection.REVERSE:
        xi = (base + p.rho_ds0 * (T - p.A_f)) / p.rho_bA
    else:
        xi = (base + p.rho_ds0 * (T - p.M_s)) / p.rho_bM
    xi = min(max(xi, 0.0), 1.0)
    return xi, p.H * float(np.sign(sigma)) * xi


def error_metrics(numeric: AnalyticPoint, analytic: AnalyticPoint) -> Tuple[float, float]:
    """(ε_ξ, ε_εt) 절대 오차, 벡터 εᵗ 는 단축 성분 사용"""
    eps_num = float(np.atleast_1d(numeric.eps_t)[0])
    eps_ana = float(np.atleast_1d(analytic.eps_t)[0])
    return abs(analytic.xi - numeric.xi), abs(eps_ana - eps_num)


# ========== 중심차분 ==========

def fd_check(
    func: Callable[[np.ndarray], np.ndarray],
    point: np.ndarray,
    analytic: np.ndarray,
    ladder: Sequence[float] = DEFAULT_LADDER,
    scale: Optional[np.ndarray] = None,
) -> float:
    """중심차분 사다리 중 가장 좋은 상대 오차 ‖J_fd − J‖ / ‖J‖"""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    analytic = np.asarray(analytic, dtype=float).reshape(-1, point.size)
    if scale is None:
        scale = np.maximum(np.abs(point), max(float(np.max(np.abs(point))), 1.0) * 1e-3)
    reference = max(float(np.linalg.norm(analytic)), 1e-300)
    best = np.inf
    for rel in ladder:
        jac = np.empty_like(analytic)
        for j in range(point.size):
            h = rel * scale[j]
            plus, minus = point.copy(), point.copy()
            plus[j] += h
            minus[j] -= h
            jac[:, j] = (np.atleast_1d(func(plus)) - np.atleast_1d(func(minus))) / (2.0 * h)
        best = min(best, float(np.linalg.norm(jac - analytic)) / reference)
    return best


def fit_convergence_order(step_sizes: Sequence[float], errors: Sequence[float]) -> float:
    """log(오차) 대 log(스텝) 1차 적합 기울기"""
    slope, _ = np.polyfit(np.log(np.asarray(step_sizes, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


# ========== 조밀 국부 오라클 ==========

def state_vector(state: InternalState) -> np.ndarray:
    """ν = (ξ, εᵗ, S, σ) 평탄화"""
    return np.concatenate(([state.xi], state.eps_t, [state.S], state.sigma))


def state_from_vector(base: InternalState, v: np.ndarray) -> InternalState:
    n = len(base.sigma)
    return base.evolve(xi=float(v[0]), eps_t=v[1:1 + n].copy(), S=float(v[1 + n]), sigma=v[2 + n:].copy())


def state_scale(params: MaterialParams, size: int) -> np.ndarray:
    """블록별 무차원화 척도 (ξ, H, |ΔS|, E_A)"""
    return np.concatenate(([1.0], np.full(size, params.H), [abs(params.delta_S)], np.full(size, params.E_A)))


def scaled_difference(a: StateIncrement, b: StateIncrement, params: MaterialParams) -> float:
    """척도로 나눈 상대 차이 ‖a − b‖ / ‖b‖"""
    scale = state_scale(params, len(a.d_sigma))
    va, vb = a.as_vector() / scale, b.as_vector() / scale
    return float(np.linalg.norm(va - vb) / max(np.linalg.norm(vb), 1e-300))


@dataclass
class DenseOracleResult:
    increment: StateIncrement
    jacobian: np.ndarray
    condition: float
    star_increment: Optional[StateIncrement] = None


def _residual_vector(local: LocalUpdateService, state, state_n, eps, T, direction) -> np.ndarray:
    r = local.local_residual(state, state_n, eps, T, direction)
    return np.concatenate(([r.h_phi], r.h_eps_t, [r.h_S], r.h_sigma))


def local_jacobian(
    local: LocalUpdateService,
    state: InternalState,
    state_n: InternalState,
    eps: np.ndarray,
    T: float,
    direction: TransformDirection,
) -> np.ndarray:
    """∂H/∂ν 블록 행렬 (행: H_Φ, H_εt, H_S, H_σ / 열: ξ, εᵗ, S, σ)"""
    ms = local.material
    n = ms.space.size
    partials = ms.phi_and_partials(state.xi, state.sigma, T, direction, state_n.reversal_eps_t)
    d_lambda = ms.d_lambda_d_sigma(state.sigma, direction, self_accommodate=True)
    sigma_hat = ms.elastic_stress(eps, T, state.eps_t, state.S)
    i_phi, i_et, i_s, i_sg = 0, slice(1, 1 + n), 1 + n, slice(2 + n, 2 + 2 * n)
    J = np.zeros((2 * n + 2, 2 * n + 2))
    J[i_phi, 0] = partials.d_xi
    J[i_phi, i_sg] = partials.d_sigma
    J[i_et, 0] = partials.lam
    J[i_et, i_et] = -np.eye(n)
    J[i_et, i_sg] = d_lambda * (state.xi - state_n.xi)
    J[i_s, 0] = ms.params.delta_S
    J[i_s, i_s] = -1.0
    J[i_sg, i_et] = -ms.stiffness(state.S)
    J[i_sg, i_s] = -sigma_hat / state.S
    J[i_sg, i_sg] = -np.eye(n)
    return J


def local_jacobian_fd(
    local: LocalUpdateService,
    state: InternalState,
    state_n: InternalState,
    eps: np.ndarray,
    T: float,
    direction: TransformDirection,
    rel_step: float = 1e-6,
) -> np.ndarray:
    """∂H/∂ν 중심차분"""
    base = state_vector(state)
    scale = state_scale(local.material.params, local.material.space.size)
    J = np.empty((base.size, base.size))
    for j in range(base.size):
        h = rel_step * scale[j]
        plus, minus = base.copy(), base.copy()
        plus[j] += h
        minus[j] -= h
        J[:, j] = (
            _residual_vector(local, state_from_vector(state, plus), state_n, eps, T, direction)
            - _residual_vector(local, state_from_vector(state, minus), state_n, eps, T, direction)
        ) / (2.0 * h)
    return J


def equilibrated_solve(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """행/열 평형화 후 LU 해"""
    rows = 1.0 / np.max(np.abs(J), axis=1)
    scaled = J * rows[:, None]
    cols = 1.0 / np.max(np.abs(scaled), axis=0)
    scaled = scaled * cols[None, :]
    if not np.all(np.isfinite(scaled)):
        raise SingularMatrixError("평형화할 수 없는 야코비안 (0 행/열)", float("inf"))
    try:
        y = scipy.linalg.solve(scaled, rhs * rows)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"평형화된 야코비안이 특이합니다: {e}", float(np.linalg.cond(scaled))) from e
    return y * cols


def _as_increment(v: np.ndarray, n: int) -> StateIncrement:
    return StateIncrement(float(v[0]), v[1:1 + n].copy(), float(v[1 + n]), v[2 + n:].copy())


def dense_local_oracle(
    local: LocalUpdateService,
    state: InternalState,
    state_n: InternalState,
    eps: np.ndarray,
    T: float,
    direction: TransformDirection,
    du: Optional[np.ndarray] = None,
    B: Optional[np.ndarray] = None,
    finite_difference: bool = False,
) -> DenseOracleResult:
    """−(∂H/∂ν)⁻¹H 와 −(∂H/∂ν)⁻¹(∂H/∂u)δu 를 조밀 행렬로 직접 계산 (테스트 전용)"""
    n = local.material.space.size
    if finite_difference:
        J = local_jacobian_fd(local, state, state_n, eps, T, direction)
    else:
        J = local_jacobian(local, state, state_n, eps, T, direction)
    residual = _residual_vector(local, state, state_n, eps, T, direction)
    increment = _as_increment(equilibrated_solve(J, -residual), n)
    star = None
    if du is not None and B is not None:
        coupling = np.zeros(2 * n + 2)
        coupling[2 + n:] = local.material.stiffness(state.S) @ (B @ du)
        star = _as_increment(equilibrated_solve(J, -coupling), n)
    return DenseOracleResult(increment, J, float(np.linalg.cond(J)), star)


# ========== 가우스점 문제 묶음 ==========

@dataclass(frozen=True)
class GaussProblem:
    state_n: InternalState
    eps: np.ndarray
    T: float
    direction: TransformDirection


def _unit_direction(rng: np.random.Generator, space: ConstitutiveSpace) -> np.ndarray:
    if space.size == 1:
        return np.array([1.0 if rng.uniform() < 0.7 else -1.0])
    v = deviatoric(rng.normal(size=6))
    return v / space.equivalent_stress(v)


def _forward_problem(ms: MaterialService, rng: np.random.Generator, proportional: bool) -> GaussProblem:
    p, space = ms.params, ms.space
    T = rng.uniform(250.0, 300.0)
    v = _unit_direction(rng, space)
    state_n = InternalState.initial(space.size, p.S_A)
    xi_n = 0.0
    if not proportional:
        # 이미 다른 방향으로 일부 변태한 상태
        xi_n = rng.uniform(0.05, 0.2)
        w = (v + 0.2 * _unit_direction(rng, space)) * p.Y / p.H
        lam_n = ms.transformation_tensor(w, None, TransformDirection.FORWARD)
        eps_t_n = lam_n * xi_n
        state_n = InternalState(xi_n, eps_t_n, p.S_A + xi_n * p.delta_S, np.zeros(space.size), eps_t_n.copy())
    d_xi = rng.uniform(0.1, 0.6) if proportional else rng.uniform(0.02, 0.08)
    start = (-p.rho_ds0 * (T - p.M_s) + p.rho_bM * xi_n) / p.H
    magnitude = start + d_xi * (p.rho_bM / p.H + p.E_A * p.H)
    sigma_trial = magnitude * v
    if space.size == 6:
        sigma_trial = sigma_trial + rng.uniform(-5e7, 5e7) * np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    eps = ms.compliance(state_n.S) @ sigma_trial + state_n.eps_t + ms.thermal_strain(T)
    return GaussProblem(state_n, eps, T, TransformDirection.FORWARD)


def build_gauss_battery(
    ms: MaterialService,
    n_forward: int = 20,
    n_reverse: int = 20,
    seed: int = 7,
    e_H: float = 1e-11,
) -> List[GaussProblem]:
    """정변태/역변태 가우스점 문제 묶음 (결정적 난수)"""
    rng = np.random.default_rng(seed)
    local = LocalUpdateService(ms, LocalScheme.NEWTON_RAPHSON, e_H=e_H, max_inner=200)
    forward, reverse = [], []
    tries = 0
    while (len(forward) < n_forward or len(reverse) < n_reverse) and tries < 20 * (n_forward + n_reverse):
        tries += 1
        problem = _forward_problem(ms, rng, proportional=(tries % 2 == 1))
        _, phi_fwd, phi_rev = local.trial_elastic(problem.state_n, problem.eps, problem.T)
        if local.detect_direction(phi_fwd, phi_rev, problem.state_n.xi) != TransformDirection.FORWARD:
            continue
        if len(forward) < n_forward:
            forward.append(problem)
        if len(reverse) >= n_reverse:
            continue
        converged, _ = local.resolve_local(problem.state_n, problem.eps, problem.T)
        if converged.saturated or converged.xi < 0.05:
            continue
        T_rev = problem.T + rng.uniform(30.0, 60.0)
        eps_rev = problem.eps * rng.uniform(0.5, 0.9)
        _, phi_fwd, phi_rev = local.trial_elastic(converged, eps_rev, T_rev)
        if local.detect_direction(phi_fwd, phi_rev, converged.xi) == TransformDirection.REVERSE:
            reverse.append(GaussProblem(converged, eps_rev, T_rev, TransformDirection.REVERSE))
    logger.debug(f"🔁 가우스점 문제 생성 - 정변태 {len(forward)}개, 역변태 {len(reverse)}개 ({tries}회 시도)")
    return forward + reverse


def perturbed_iterate(ms: MaterialService, problem: GaussProblem, rng: np.random.Generator) -> InternalState:
    """수렴하지 않은 임의의 허용 반복점"""
    p = ms.params
    state_n = problem.state_n
    sigma_trial = ms.elastic_stress(problem.eps, problem.T, state_n.eps_t, state_n.S)
    sign = 1.0 if problem.direction == TransformDirection.FORWARD else -1.0
    d_xi = sign * rng.uniform(0.01, 0.1) * (1.0 if sign > 0 else state_n.xi)
    lam = ms.transformation_tensor(sigma_trial, state_n.reversal_eps_t, problem.direction, self_accommodate=True)
    size = ms.space.size
    return state_n.evolve(
        xi=state_n.xi + d_xi,
        eps_t=state_n.eps_t + lam * d_xi + rng.normal(size=size) * 1e-4 * p.H,
        S=state_n.S + p.delta_S * d_xi * (1.0 + rng.uniform(-0.1, 0.1)),
        sigma=sigma_trial * (1.0 + rng.uniform(-0.05, 0.05)) + rng.normal(size=size) * 1e6,
        direction=problem.direction,
    )


# ========== FEM 검사 ==========

def hex_patch_test(ms: MaterialService, distortion: float = 0.15, seed: int = 3) -> float:
    """찌그러진 2×2×2 hex 메쉬에 선형 변위 경계 → 일정 응력 재현 상대 오차"""
    rng = np.random.default_rng(seed)
    box = build_box_mesh((1.0, 1.0, 1.0), (2, 2, 2))
    nodes = box.nodes.copy()
    center = nearest_node(box, (0.5, 0.5, 0.5))
    nodes[center] += distortion * rng.uniform(-1.0, 1.0, size=3)
    grad = rng.normal(size=(3, 3)) * 1e-3
    boundary = [i for i, x in enumerate(nodes) if np.any(np.isclose(x, 0.0) | np.isclose(x, 1.0))]
    dirichlet = [(3 * i + a, float((grad @ nodes[i])[a])) for i in boundary for a in range(3)]
    patch = Mesh(nodes, box.elements, ElementKind.HEX8, dirichlet, np.zeros(3 * len(nodes)), load_axis=1)
    asm = AssemblyService(patch)
    stiffness = ms.stiffness(ms.params.S_A)
    d0 = asm.initial_displacement()
    zero_load = np.zeros(patch.n_dofs)
    r, _ = asm.assemble_residual([stiffness @ e for e in asm.strains(d0)], zero_load)
    d = d0 + asm.solve(asm.assemble_tangent([stiffness] * asm.n_points), -r)
    expected_strain = np.array([
        grad[0, 0], grad[1, 1], grad[2, 2],
        grad[1, 2] + grad[2, 1], grad[0, 2] + grad[2, 0], grad[0, 1] + grad[1, 0],
    ])
    expected = stiffness @ expected_strain
    worst = max(float(np.linalg.norm(stiffness @ e - expected)) for e in asm.strains(d))
    return worst / float(np.linalg.norm(expected))


def bar_stiffness_error(ms: MaterialService, length: float = 0.1, area: float = 0.1) -> float:
    """단일 봉 요소 자유 dof 강성 EA/L 상대 오차"""
    mesh = build_bar_mesh(length, 1, area)
    asm = AssemblyService(mesh)
    K = asm.assemble_tangent([ms.stiffness(ms.params.S_A)] * asm.n_points).toarray()
    exact = ms.params.E_A * area / length
    return abs(K[1, 1] - exact) / exact


# ========== 검증 스위트 ==========

class VerificationService:
    """오라클/성질 검사 묶음"""

    def __init__(self, material: Optional[MaterialConfig] = None):
        self.material_config = material or MaterialConfig()
        self.solid = build_material_service(self.material_config, SOLID)
        self.uniaxial = self.solid.with_space(UNIAXIAL)

    # ---------- 1D 경로 ----------

    def _bar_solver(
        self, strategy=SolverStrategy.RETURN_MAPPING, area: float = 0.1, e_H: float = 1e-6, n_elements: int = 2,
    ) -> Tuple[SolverService, Probe]:
        mesh = build_bar_mesh(1.0, n_elements, area)
        asm = AssemblyService(mesh)
        config = SolverConfig(strategy=strategy, scheme=LocalScheme.CLOSEST_POINT, e_H=e_H)
        node = nearest_node(mesh, default_probe_point(mesh))
        probe = Probe(node, node, asm.nearest_point(default_probe_point(mesh)), (1.0,))
        return SolverService(self.uniaxial, asm, config), probe

    def run_bar_path(
        self, path: LoadPathConfig, strategy=SolverStrategy.RETURN_MAPPING, area: float = 0.1, n_elements: int = 2,
    ):
        solver, probe = self._bar_solver(strategy, area, n_elements=n_elements)
        initial = solver.initial_state(path.T_start, path.load_start, path.xi_start)
        return solver.run_load_path(path.expand(), initial, probe)

    def cooling_error(self, dT: float, T_check: float = 220.0) -> Tuple[float, float]:
        """무응력 냉각 경로에서 T_check 의 (ε_ξ, ξ(M_f))"""
        p = self.uniaxial.params
        path = LoadPathConfig(T_start=300.0, segments=[LoadSegment(T_end=p.M_f, dT=dT)])
        result = self.run_bar_path(path)
        record = min(result.records, key=lambda r: abs(r.T - T_check))
        xi_ana, _ = analytic_1d(0.0, record.T, p, TransformDirection.FORWARD)
        e_xi, _ = error_metrics(
            AnalyticPoint(record.T, 0.0, record.probe_xi, 0.0), AnalyticPoint(record.T, 0.0, xi_ana, 0.0)
        )
        return e_xi, result.records[-1].probe_xi

    # ---------- 개별 검사 ----------

    def check_analytic(self) -> List[VerifyCheck]:
        e_xi, xi_final = self.cooling_error(0.1)
        return [
            VerifyCheck(name="analytic_1d_xi_220K", passed=e_xi < 1e-3, measured=e_xi, threshold=1e-3),
            VerifyCheck(name="analytic_1d_xi_Mf", passed=abs(xi_final - 1.0) < 1e-6,
                        measured=abs(xi_final - 1.0), threshold=1e-6),
        ]

    def strain_path_xi(self, dT: float, T_start: float = 280.0, T_end: float = 240.0) -> float:
        """비비례 변형률 경로를 따라 냉각한 가우스점 하나의 최종 ξ

        축 변형률은 고정, xy 전단은 냉각량에 비례해 늘어나므로 응력 방향이 계속 회전한다.
        """
        ms = self.solid
        local = LocalUpdateService(ms, LocalScheme.CLOSEST_POINT, e_H=1e-12, max_inner=200)
        axial = 4.5e-3 * np.array([1.0, -0.5, -0.5, 0.0, 0.0, 0.0])
        shear = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 8e-3 / (T_start - T_end)])
        state = InternalState.initial(6, ms.params.S_A)
        n_steps = int(round((T_start - T_end) / dT))
        for T in np.linspace(T_start, T_end, n_steps + 1)[1:]:
            eps = axial + shear * (T_start - T) + ms.thermal_strain(T)
            state, _ = local.resolve_local(state, eps, float(T))
        return state.xi

    def order_errors(self, steps: Sequence[float] = ORDER_STEPS) -> List[float]:
        reference = self.strain_path_xi(ORDER_REFERENCE_STEP)
        return [abs(self.strain_path_xi(dT) - reference) for dT in steps]

    def check_convergence_order(self) -> VerifyCheck:
        errors = self.order_errors()
        if max(errors) < ERROR_FLOOR:
            return VerifyCheck(name="convergence_order", passed=False, measured=max(errors), threshold=ERROR_FLOOR,
                               detail="측정 불가: 오차가 반올림 수준")
        slope = fit_convergence_order(ORDER_STEPS, [max(e, ERROR_FLOOR) for e in errors])
        return VerifyCheck(name="convergence_order", passed=0.8 <= slope <= 1.2, measured=slope, threshold=1.0,
                           detail=f"errors={errors}")

    def mesh_convergence(
        self, n_elements: Sequence[int] = MESH_SWEEP, dF: float = 1e8, load_end: float = 3.5e9, area: float = 10.0,
    ) -> List[Tuple[int, float, float]]:
        """요소 수별 310 K 하중 끝점의 (n, ε_ξ, ε_εt)"""
        p = self.uniaxial.params
        path = LoadPathConfig(T_start=310.0, load_start=5e6, segments=[LoadSegment(T_end=310.0, load_end=load_end, dF=dF)])
        sweep = []
        for n in n_elements:
            last = self.run_bar_path(path, area=area, n_elements=n).records[-1]
            sigma = last.load / area
            xi_ana, eps_ana = analytic_1d(sigma, last.T, p, TransformDirection.FORWARD)
            e_xi, e_eps = error_metrics(
                AnalyticPoint(last.T, sigma, last.probe_xi, last.probe_eps_t), AnalyticPoint(last.T, sigma, xi_ana, eps_ana)
            )
            logger.debug(f"🔁 요소 {n}개: ε_ξ={e_xi:.3e}, ε_εt={e_eps:.3e}")
            sweep.append((n, e_xi, e_eps))
        return sweep

    def check_mesh_convergence(self) -> VerifyCheck:
        sweep = self.mesh_convergence()
        worst = max(max(e_xi, e_eps / self.uniaxial.params.H) for _, e_xi, e_eps in sweep)
        detail = ", ".join(f"n={n}: {e_xi:.2e}" for n, e_xi, _ in sweep)
        return VerifyCheck(name="mesh_convergence_1d", passed=worst < 1e-3, measured=worst, threshold=1e-3, detail=detail)

    def check_closure(self) -> List[VerifyCheck]:
        twsme = LoadPathConfig(T_start=300.0, segments=[LoadSegment(T_end=180.0, dT=0.5), LoadSegment(T_end=300.0, dT=0.5)])
        last = self.run_bar_path(twsme).records[-1]
        twsme_err = max(last.probe_xi, float(np.max(np.abs(last.probe_eps_t))))
        superelastic = LoadPathConfig(
            T_start=310.0, load_start=5e6,
            segments=[LoadSegment(T_end=310.0, load_end=5e9, steps=100), LoadSegment(T_end=310.0, load_end=5e6, steps=100)],
        )
        result = self.run_bar_path(superelastic, area=10.0)
        peak = max(r.probe_xi for r in result.records)
        final = result.records[-1].probe_xi
        return [
            VerifyCheck(name="twsme_closure", passed=twsme_err < 1e-6, measured=twsme_err, threshold=1e-6),
            VerifyCheck(name="superelastic_closure", passed=final < 1e-6 and peak > 0.99, measured=final,
                        threshold=1e-6, detail=f"최대 ξ={peak:.6f}"),
        ]

    def check_scheme_equivalence(self, ms: MaterialService, label: str) -> VerifyCheck:
        battery = build_gauss_battery(ms)
        worst = 0.0
        for problem in battery:
            results = []
            for scheme in LocalScheme:
                local = LocalUpdateService(ms, scheme, e_H=1e-11, max_inner=200)
                results.append(local.resolve_local(problem.state_n, problem.eps, problem.T)[0])
            ref = results[0]
            for other in results[1:]:
                worst = max(
                    worst,
                    abs(other.xi - ref.xi),
                    float(np.linalg.norm(other.eps_t - ref.eps_t)) / ms.params.H,
                    float(np.linalg.norm(other.sigma - ref.sigma)) / max(float(np.linalg.norm(ref.sigma)), 1.0),
                )
        return VerifyCheck(name=f"scheme_equivalence_{label}", passed=worst < 1e-8, measured=worst, threshold=1e-8,
                           detail=f"{len(battery)}개 문제")

    def check_dense_oracle(self, ms: MaterialService, label: str, count: int = 20) -> List[VerifyCheck]:
        rng = np.random.default_rng(11)
        local = LocalUpdateService(ms, LocalScheme.NEWTON_RAPHSON)
        battery = build_gauss_battery(ms, count // 2, count - count // 2)
        worst, worst_star, min_cond = 0.0, 0.0, np.inf
        for problem in battery:
            state = perturbed_iterate(ms, problem, rng)
            n_dofs = 2 if ms.space.size == 1 else 24
            B = rng.normal(size=(ms.space.size, n_dofs))
            du = rng.normal(size=n_dofs) * 1e-4
            oracle = dense_local_oracle(local, state, problem.state_n, problem.eps, problem.T, problem.direction, du, B)
            residual = local.local_residual(state, problem.state_n, problem.eps, problem.T, problem.direction)
            closed = local.delta_nu(state, problem.state_n, residual, problem.eps, problem.T, problem.direction)
            star = local.delta_nu_star(state, problem.state_n, du, B, problem.eps, problem.T, problem.direction)
            worst = max(worst, scaled_difference(closed, oracle.increment, ms.params))
            worst_star = max(worst_star, scaled_difference(star, oracle.star_increment, ms.params))
            min_cond = min(min_cond, oracle.condition)
        return [
            VerifyCheck(name=f"dense_oracle_delta_nu_{label}", passed=worst < 1e-8, measured=worst, threshold=1e-8),
            VerifyCheck(name=f"dense_oracle_delta_nu_star_{label}", passed=worst_star < 1e-8, measured=worst_star,
                        threshold=1e-8),
            VerifyCheck(name=f"raw_jacobian_condition_{label}", passed=min_cond > 1e9, measured=min_cond, threshold=1e9),
        ]

    def check_partials(self) -> List[VerifyCheck]:
        ms = self.solid
        rng = np.random.default_rng(5)
        worst_phi, worst_lambda = 0.0, 0.0
        for _ in range(20):
            sigma = deviatoric(rng.normal(size=6)) * 2e8 + rng.normal() * 5e7 * np.array([1, 1, 1, 0, 0, 0.0])
            xi, T = rng.uniform(0.1, 0.9), rng.uniform(200.0, 300.0)
            direction = TransformDirection.FORWARD
            partials = ms.phi_and_partials(xi, sigma, T, direction)
            worst_phi = max(worst_phi, fd_check(lambda s: ms.phi(xi, s, T, direction), sigma, partials.d_sigma))
            worst_phi = max(worst_phi, fd_check(lambda x: ms.phi(x[0], sigma, T, direction), [xi], [partials.d_xi]))
            worst_lambda = max(worst_lambda, fd_check(
                lambda s: ms.transformation_tensor(s, None, direction), sigma, ms.d_lambda_d_sigma(sigma, direction)
            ))
        return [
            VerifyCheck(name="fd_phi_partials", passed=worst_phi < 1e-6, measured=worst_phi, threshold=1e-6),
            VerifyCheck(name="fd_d_lambda_d_sigma", passed=worst_lambda < 1e-6, measured=worst_lambda, threshold=1e-6),
        ]

    def check_tangent(self, count: int = 20) -> VerifyCheck:
        ms = self.solid
        local = LocalUpdateService(ms, LocalScheme.NEWTON_RAPHSON, e_H=1e-13, max_inner=200)
        battery = build_gauss_battery(ms, count, 0, seed=19)
        worst = 0.0
        for problem in battery:
            state, _ = local.resolve_local(problem.state_n, problem.eps, problem.T)
            if state.direction == TransformDirection.NONE:
                continue
            tangent = local.consistent_tangent(state, problem.state_n, problem.eps, problem.T, state.direction)
            worst = max(worst, fd_check(
                lambda e: local.resolve_local(problem.state_n, e, problem.T)[0].sigma,
                problem.eps, tangent, ladder=(1e-4, 1e-5), scale=np.full(6, 1e-2),
            ))
        return VerifyCheck(name="consistent_tangent_fd", passed=worst < 1e-5, measured=worst, threshold=1e-5)

    def check_fem(self) -> List[VerifyCheck]:
        patch = hex_patch_test(self.solid)
        bar = bar_stiffness_error(self.uniaxial)
        return [
            VerifyCheck(name="hex8_patch_test", passed=patch < 1e-8, measured=patch, threshold=1e-8),
            VerifyCheck(name="bar_stiffness", passed=bar < 1e-12, measured=bar, threshold=1e-12),
        ]

    def check_strategy_equivalence(self) -> VerifyCheck:
        mesh = build_box_mesh((0.2, 0.6, 0.2), (1, 3, 1), "traction")
        path = LoadPathConfig(T_start=310.0, load_start=0.0, segments=[LoadSegment(T_end=250.0, load_end=1.5e8, steps=12)])
        finals = []
        for strategy in (SolverStrategy.RETURN_MAPPING, SolverStrategy.PARALLEL_PROJECTION):
            asm = AssemblyService(mesh)
            solver = SolverService(self.solid, asm, SolverConfig(strategy=strategy, e_R=1e-9, e_H=1e-9))
            point = default_probe_point(mesh)
            node = nearest_node(mesh, point)
            probe = Probe(node, 3 * node + 1, asm.nearest_point(point), tuple(point))
            finals.append(solver.run_load_path(path.expand(), solver.initial_state(310.0), probe).final)
        rm, pp = finals
        d_err = float(np.max(np.abs(rm.d - pp.d)) / max(float(np.max(np.abs(rm.d))), 1e-300))
        xi_err = max(abs(a.xi - b.xi) for a, b in zip(rm.states, pp.states))
        worst = max(d_err, xi_err)
        return VerifyCheck(name="strategy_equivalence_3d", passed=worst < 1e-6, measured=worst, threshold=1e-6)

    # ---------- 스위트 ----------

    @staticmethod
    def _guarded(name: str, check: Callable[[], object]) -> List[VerifyCheck]:
        """검사 중 해석기 예외는 실패 항목으로 기록"""
        try:
            result = check()
        except SmaSolverError as e:
            logger.error(f"❌ {name} 검사 중 예외: {e.message}")
            return [VerifyCheck(name=name, passed=False, threshold=0.0, detail=e.message)]
        return list(result) if isinstance(result, list) else [result]

    def run_suite(self, quick: bool = False) -> VerifyReport:
        """검증 스위트 실행 (quick 이면 3D 전역 비교, 차수 적합, 요소 수 스윕 생략)"""
        logger.info(f"🤍1. 검증 스위트 시작 (quick={quick})")
        plan = [
            ("fem", self.check_fem),
            ("partials", self.check_partials),
            ("scheme_equivalence_solid", lambda: self.check_scheme_equivalence(self.solid, "solid")),
            ("scheme_equivalence_uniaxial", lambda: self.check_scheme_equivalence(self.uniaxial, "uniaxial")),
            ("dense_oracle", lambda: self.check_dense_oracle(self.solid, "solid")),
            ("consistent_tangent", self.check_tangent),
            ("analytic_1d", self.check_analytic),
            ("closure", self.check_closure),
        ]
        if not quick:
            plan += [
                ("convergence_order", self.check_convergence_order),
                ("mesh_convergence", self.check_mesh_convergence),
                ("strategy_equivalence_3d", self.check_strategy_equivalence),
            ]
        checks: List[VerifyCheck] = []
        for name, check in plan:
            checks += self._guarded(name, check)
        for check in checks:
            mark = "✅" if check.passed else "❌"
            measured = "예외" if check.measured is None else f"{check.measured:.3e}"
            logger.info(f"{mark} {check.name}: {measured} (기준 {check.threshold:.1e})")
        report = VerifyReport(passed=all(c.passed for c in checks), checks=checks)
        logger.info(f"📊 검증 결과 - {sum(c.passed for c in checks)}/{len(checks)} 통과")
        return report

"""
전역 평형 해법 (중첩 return mapping / 교차 반복 parallel projection) 과 하중 스텝 구동
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config.settings import REACTION_BALANCE_TOL
from app.domain.exceptions import GlobalConvergenceError, LocalConvergenceError, MaterialError, SingularMatrixError
from app.domain.model.material_model import TransformDirection
from app.domain.model.mesh_model import Probe
from app.domain.model.state_model import GlobalState, InternalState, SolverStrategy, StepOutcome
from app.domain.schema.sim_schema import MaxStepResult, SolverConfig
from app.domain.service.assembly_service import AssemblyService
from app.domain.service.local_update_service import LocalUpdateService
from app.domain.service.material_service import MaterialService

logger = logging.getLogger(__name__)

_BOUND_TOL = 1e-12

# 해석 도중 발생하면 스텝 실패로 다루는 예외 (재료 예외 포함)
_STEP_FAILURES = (GlobalConvergenceError, LocalConvergenceError, SingularMatrixError, MaterialError)


def estimate_convergence_order(history: Sequence[float]) -> Optional[float]:
    """마지막 세 잔차로 수렴 차수 log(r₊/r)/log(r/r₋) 추정"""
    values = [r for r in history if r > 0.0]
    if len(values) < 3:
        return None
    r0, r1, r2 = values[-3:]
    if r1 >= r0:
        return None
    return float(np.log(r2 / r1) / np.log(r1 / r0))


@dataclass
class StepRecord:
    """수렴 스텝 하나의 기록 (관측값 + 수렴 이력)"""
    step: int
    time: float
    T: float
    load: float
    probe_u: float
    probe_sigma: np.ndarray
    probe_xi: float
    probe_eps_t: np.ndarray
    outcome: StepOutcome


@dataclass
class LoadPathResult:
    records: List[StepRecord] = field(default_factory=list)
    final: Optional[GlobalState] = None
    wall_time: float = 0.0


class SolverService:
    """하중 스텝 하나를 푸는 두 가지 전역 해법"""

    def __init__(self, material: MaterialService, assembly: AssemblyService, config: SolverConfig):
        self.material = material
        self.assembly = assembly
        self.config = config
        self.local = LocalUpdateService(material, config.scheme, config.e_H, config.max_inner)
        logger.info(f"⚙️ 해법 초기화 - {config.strategy.value} / {config.scheme.value}")

    # ---------- 초기 상태 ----------

    def initial_state(self, T: float, load: float = 0.0, xi: float = 0.0) -> GlobalState:
        S, _ = self.material.effective_properties(xi)
        size = self.material.space.size
        states = [InternalState.initial(size, S, xi=xi) for _ in range(self.assembly.n_points)]
        d = self.assembly.initial_displacement()
        return GlobalState(d=d, reactions=np.zeros(len(self.assembly.constrained)), states=states, T=T, load=load)

    # ---------- 공통 ----------

    def _external_force(self, load: float) -> np.ndarray:
        return load * self.assembly.mesh.reference_load

    def _reaction_balance(self, reactions: np.ndarray, f_ext: np.ndarray) -> float:
        """축별 (Σ 반력 + Σ 외력) 크기, ‖F‖ 로 정규화"""
        mesh = self.assembly.mesh
        total = f_ext.copy()
        total[self.assembly.constrained] += reactions
        sums = total.reshape(-1, mesh.dofs_per_node).sum(axis=0)
        return float(np.linalg.norm(sums) / max(np.linalg.norm(f_ext), 1.0))

    def _min_dissipation(self, states: Sequence[InternalState], states_n: Sequence[InternalState], T: float) -> float:
        """min Π·Δξ / Y (변태한 가우스점만)"""
        ms = self.material
        worst = 0.0
        for st, st_n in zip(states, states_n):
            d_xi = st.xi - st_n.xi
            if abs(d_xi) <= _BOUND_TOL:
                continue
            direction = TransformDirection.FORWARD if d_xi > 0 else TransformDirection.REVERSE
            lam = ms.transformation_tensor(st.sigma, st_n.reversal_eps_t, direction, self_accommodate=True)
            pi = ms.driving_force(st.xi, st.sigma, T, lam, direction)
            worst = min(worst, pi * d_xi / ms.params.Y)
        return worst

    def _finish(
        self,
        d: np.ndarray,
        states: List[InternalState],
        states_n: Sequence[InternalState],
        reactions: np.ndarray,
        f_ext: np.ndarray,
        T: float,
        load: float,
        outcome: StepOutcome,
        started: float,
    ) -> Tuple[GlobalState, StepOutcome]:
        outcome.converged = True
        outcome.convergence_order = estimate_convergence_order(outcome.residual_history)
        outcome.min_dissipation = self._min_dissipation(states, states_n, T)
        outcome.reaction_balance = self._reaction_balance(reactions, f_ext)
        outcome.wall_time = time.perf_counter() - started
        if outcome.reaction_balance > REACTION_BALANCE_TOL:
            logger.debug(f"🔁 반력 평형 오차 {outcome.reaction_balance:.3e}")
        return GlobalState(d=d, reactions=reactions, states=states, T=T, load=load), outcome

    def _fail(self, outcome: StepOutcome, T: float, load: float):
        raise GlobalConvergenceError(
            f"전역 반복 {self.config.max_outer}회 내 미수렴 (T={T:g}, load={load:g})",
            -1,
            outcome.residual_history,
        )

    def elastic_predictor(self, prev: GlobalState, T: float, f_ext: np.ndarray) -> Tuple[np.ndarray, bool]:
        """내부상태를 동결한 탄성 평형 예측 (온도/하중 증분을 변위로 흡수)

        반환값은 (예측 변위, 선형 해를 풀었는지).
        """
        asm, ms = self.assembly, self.material
        stresses = [
            ms.elastic_stress(eps, T, st.eps_t, st.S) for st, eps in zip(prev.states, asm.strains(prev.d))
        ]
        r, _ = asm.assemble_residual(stresses, f_ext)
        if asm.residual_norm(r, f_ext) <= self.config.e_R:
            return prev.d.copy(), False
        K = asm.assemble_tangent([ms.stiffness(st.S) for st in prev.states])
        return prev.d + asm.solve(K, -r), True

    # ---------- 중첩 return mapping ----------

    def step_return_mapping(self, prev: GlobalState, T: float, load: float) -> Tuple[GlobalState, StepOutcome]:
        """탄성 예측 후, 매 전역 반복마다 모든 가우스점 국부식을 완전히 풀고 일관 접선으로 전역 갱신"""
        cfg, asm, local = self.config, self.assembly, self.local
        started = time.perf_counter()
        f_ext = self._external_force(load)
        outcome = StepOutcome()
        d, solved = self.elastic_predictor(prev, T, f_ext)
        outcome.outer_iterations += int(solved)
        while True:
            strains = asm.strains(d)
            states, tangents = [], []
            for state_n, eps in zip(prev.states, strains):
                state, iterations = local.resolve_local(state_n, eps, T)
                outcome.local_updates += iterations
                states.append(state)
                tangents.append(local.consistent_tangent(state, state_n, eps, T, state.direction))
            r, reactions = asm.assemble_residual([s.sigma for s in states], f_ext)
            norm = asm.residual_norm(r, f_ext)
            outcome.residual_history.append(norm)
            logger.debug(f"🔁 RM 전역 반복 {outcome.outer_iterations}: ‖R‖={norm:.3e}")
            if norm <= cfg.e_R:
                return self._finish(d, states, prev.states, reactions, f_ext, T, load, outcome, started)
            if outcome.outer_iterations >= cfg.max_outer:
                self._fail(outcome, T, load)
            d = d + asm.solve(asm.assemble_tangent(tangents), -r)
            outcome.outer_iterations += 1

    # ---------- 교차 반복 parallel projection ----------

    def step_parallel_projection(self, prev: GlobalState, T: float, load: float) -> Tuple[GlobalState, StepOutcome]:
        """전역 반복마다 가우스점당 국부 증분 하나 (δν_H + δν*(δd)), 우변에 국부 잔차 보정 포함"""
        cfg, asm, local, ms = self.config, self.assembly, self.local, self.material
        started = time.perf_counter()
        f_ext = self._external_force(load)
        outcome = StepOutcome()
        d, solved = self.elastic_predictor(prev, T, f_ext)
        outcome.outer_iterations += int(solved)
        iterates: List[InternalState] = list(prev.states)
        directions = [TransformDirection.NONE] * asm.n_points

        while True:
            strains = asm.strains(d)
            tangents, corrections, pending = [], [], {}
            local_norm = 0.0
            for i, (state_n, eps) in enumerate(zip(prev.states, strains)):
                sigma_trial, phi_fwd, phi_rev = local.trial_elastic(state_n, eps, T)
                direction = local.detect_direction(phi_fwd, phi_rev, state_n.xi)
                if direction == TransformDirection.NONE:
                    iterates[i] = state_n.evolve(sigma=sigma_trial, direction=direction, saturated=False)
                    directions[i] = direction
                    tangents.append(ms.stiffness(state_n.S))
                    corrections.append(None)
                    continue

                it = iterates[i]
                if directions[i] != direction:
                    # 새로 비탄성이 된 가우스점은 탄성 예측에서 출발
                    it = state_n.evolve(sigma=sigma_trial, direction=direction, saturated=False)
                directions[i] = direction

                bound = self._bound_reached(it, direction)
                if bound is not None and ms.phi(bound, it.sigma, T, direction, state_n.reversal_eps_t) >= 0.0:
                    it, iterations = local.saturate(it, state_n, eps, T, direction, bound)
                    outcome.local_updates += iterations
                    iterates[i] = it
                    tangents.append(local.consistent_tangent(it, state_n, eps, T, TransformDirection.NONE))
                    corrections.append(None)
                    continue

                it = it.evolve(direction=direction, saturated=False)
                residual = local.local_residual(it, state_n, eps, T, direction)
                local_norm = max(local_norm, local.residual_norm(residual))
                lin = local.linearize(it, state_n, eps, T, direction)
                inc_h = local.delta_nu(it, state_n, residual, eps, T, direction, lin=lin)
                iterates[i] = it
                tangents.append(local.consistent_tangent(it, state_n, eps, T, direction, lin=lin))
                corrections.append(inc_h.d_sigma)
                pending[i] = (inc_h, lin)

            r, reactions = asm.assemble_residual([s.sigma for s in iterates], f_ext)
            norm = asm.residual_norm(r, f_ext)
            # 이력 값은 max(‖R‖, max‖H‖)
            outcome.residual_history.append(max(norm, local_norm))
            logger.debug(f"🔁 PP 전역 반복 {outcome.outer_iterations}: ‖R‖={norm:.3e}, max‖H‖={local_norm:.3e}")
            if norm <= cfg.e_R and local_norm < cfg.e_H:
                states = [
                    local.finalize(it, directions[i]) if i in pending else it
                    for i, it in enumerate(iterates)
                ]
                return self._finish(d, states, prev.states, reactions, f_ext, T, load, outcome, started)
            if outcome.outer_iterations >= cfg.max_outer:
                self._fail(outcome, T, load)

            rhs = -r + asm.assemble_coupling_correction(corrections)
            delta = asm.solve(asm.assemble_tangent(tangents), rhs)
            d = d + delta
            outcome.outer_iterations += 1

            for i, (inc_h, lin) in pending.items():
                gp, it, state_n = asm.points[i], iterates[i], prev.states[i]
                inc_star = local.delta_nu_star(it, state_n, delta[gp.dofs], gp.B, strains[i], T, directions[i], lin=lin)
                inc, bound = local.limit_to_bounds(it, inc_h + inc_star)
                eps_next = gp.B @ d[gp.dofs]
                updated = local.apply_increment(it, state_n, inc, eps_next, T, directions[i])
                if bound is not None:
                    updated = updated.evolve(xi=bound)
                iterates[i] = updated
                outcome.local_updates += 1

    @staticmethod
    def _bound_reached(state: InternalState, direction: TransformDirection) -> Optional[float]:
        if direction == TransformDirection.FORWARD and state.xi >= 1.0 - _BOUND_TOL:
            return 1.0
        if direction == TransformDirection.REVERSE and state.xi <= _BOUND_TOL:
            return 0.0
        return None

    def step(self, prev: GlobalState, T: float, load: float) -> Tuple[GlobalState, StepOutcome]:
        if self.config.strategy == SolverStrategy.RETURN_MAPPING:
            return self.step_return_mapping(prev, T, load)
        return self.step_parallel_projection(prev, T, load)

    # ---------- 하중 경로 ----------

    def _step_with_halving(self, prev: GlobalState, T: float, load: float, depth: int) -> Tuple[GlobalState, StepOutcome]:
        try:
            return self.step(prev, T, load)
        except _STEP_FAILURES as e:
            if not self.config.auto_halving or depth >= self.config.max_halvings:
                raise
            logger.warning(f"⚠️ 스텝 분할 (깊이 {depth + 1}): {e.message}")
            T_mid, load_mid = 0.5 * (prev.T + T), 0.5 * (prev.load + load)
            mid, first = self._step_with_halving(prev, T_mid, load_mid, depth + 1)
            end, second = self._step_with_halving(mid, T, load, depth + 1)
            return end, first.merge(second)

    def probe_values(self, state: GlobalState, probe: Probe) -> Tuple[float, np.ndarray, float, np.ndarray]:
        """(관측 절점 변위, 관측 가우스점 σ, ξ, εᵗ) 6성분으로 확장"""
        space = self.material.space
        gp_state = state.states[probe.gauss_index]
        return (
            float(state.d[probe.dof]),
            space.to_voigt6_stress(gp_state.sigma),
            float(gp_state.xi),
            space.to_voigt6_transformation_strain(gp_state.eps_t),
        )

    def run_load_path(
        self,
        path: Iterable[Tuple[float, float]],
        initial: GlobalState,
        probe: Probe,
        on_step: Optional[Callable[[StepRecord], None]] = None,
    ) -> LoadPathResult:
        """순차 스텝, 실패 시 (설정되면) 자동 절반 분할, 아니면 스텝 번호와 함께 예외"""
        points = list(path)
        result = LoadPathResult()
        current = initial
        started = time.perf_counter()
        total = max(len(points), 1)
        for index, (T, load) in enumerate(points, start=1):
            try:
                current, outcome = self._step_with_halving(current, T, load, 0)
            except _STEP_FAILURES as e:
                history = getattr(e, "residual_history", [])
                logger.error(f"❌ 스텝 {index} 실패 (T={T:g}, load={load:g}): {e.message}")
                raise GlobalConvergenceError(f"스텝 {index} 실패: {e.message}", index, history) from e
            u, sigma, xi, eps_t = self.probe_values(current, probe)
            record = StepRecord(index, index / total, T, load, u, sigma, xi, eps_t, outcome)
            result.records.append(record)
            if on_step is not None:
                on_step(record)
            logger.debug(
                f"🔁 스텝 {index}/{len(points)} T={T:.4g} load={load:.4g} "
                f"k={outcome.outer_iterations} local={outcome.local_updates} ξ={xi:.6f}"
            )
        result.final = current
        result.wall_time = time.perf_counter() - started
        logger.info(f"✅ 하중 경로 완료 - {len(points)} 스텝, {result.wall_time:.2f}s")
        return result


def max_step_search(attempt: Callable[[float], bool], grid: Sequence[float], variable: str = "T") -> MaxStepResult:
    """단조 스텝 격자를 오름차순으로 모두 시도해 전 경로가 수렴하는 최대 스텝 탐색

    수렴한 스텝보다 작은 스텝이 실패하면 non_monotone, 격자 최대값까지 수렴하면
    saturated 로 표시한다 (이때 max_step 은 한계의 하한일 뿐).
    """
    steps = sorted(float(s) for s in grid)
    attempts = {}
    for s in steps:
        ok = bool(attempt(s))
        attempts[f"{s:g}"] = ok
        logger.info(f"📊 최대 스텝 탐색 d{variable}={s:g} → {'수렴' if ok else '실패'}")
    converged = [s for s in steps if attempts[f"{s:g}"]]
    if not converged:
        return MaxStepResult(variable=variable, max_step=steps[0] if steps else None, failed=True,
                             non_monotone=False, attempts=attempts)
    best = max(converged)
    non_monotone = any(not attempts[f"{s:g}"] for s in steps if s < best)
    saturated = best == steps[-1]
    if saturated:
        logger.warning(f"⚠️ d{variable} 격자 최대값 {best:g} 까지 수렴 - 한계를 찾지 못했습니다")
    return MaxStepResult(variable=variable, max_step=best, failed=False, non_monotone=non_monotone,
                         saturated=saturated, attempts=attempts)

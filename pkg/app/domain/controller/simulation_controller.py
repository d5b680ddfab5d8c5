import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

from app.domain.exceptions import SmaSolverError
from app.domain.model.mesh_model import ElementKind, Probe
from app.domain.model.state_model import LocalScheme, SolverStrategy
from app.domain.schema.sim_schema import (
    BenchEntry,
    BenchReport,
    LoadPathConfig,
    SimConfig,
    SimulationRunResponse,
    SolveReport,
    VerifyReport,
)
from app.domain.service.assembly_service import AssemblyService
from app.domain.service.material_service import MaterialService, build_material_service
from app.domain.service.mesh_service import build_box_mesh, build_mesh, default_probe_point, nearest_node
from app.domain.service.output_service import OutputService, to_result_row, to_step_report
from app.domain.service.solver_service import LoadPathResult, SolverService, max_step_search
from app.domain.service.verification_service import VerificationService
from app.domain.service.voigt_service import space_for

logger = logging.getLogger(__name__)


class SimulationController:
    """설정 하나에 대한 실행/벤치/검증 흐름 제어"""

    def __init__(self, config: SimConfig):
        self.config = config
        self.material: MaterialService = build_material_service(config.material, space_for(config.geometry.kind))
        logger.info(f"⚙️ 시뮬레이션 컨트롤러 초기화 - {config.name} ({config.geometry.kind.value})")

    # ---------- 조립 ----------

    def build_assembly(self, divisions: Optional[Sequence[int]] = None) -> Tuple[AssemblyService, Probe]:
        geometry = self.config.geometry
        if divisions is not None and geometry.kind == ElementKind.HEX8:
            mesh = build_box_mesh(tuple(geometry.size), tuple(divisions), geometry.load_kind)
        else:
            mesh = build_mesh(geometry)
        assembly = AssemblyService(mesh)
        point = self.config.output.probe_point or list(default_probe_point(mesh))
        node = nearest_node(mesh, point)
        probe = Probe(
            node=node,
            dof=node * mesh.dofs_per_node + mesh.load_axis,
            gauss_index=assembly.nearest_point(point),
            point=tuple(float(v) for v in point),
        )
        return assembly, probe

    def build_solver(
        self,
        assembly: AssemblyService,
        strategy: Optional[SolverStrategy] = None,
        scheme: Optional[LocalScheme] = None,
    ) -> SolverService:
        update = {}
        if strategy is not None:
            update["strategy"] = strategy
        if scheme is not None:
            update["scheme"] = scheme
        return SolverService(self.material, assembly, self.config.solver.model_copy(update=update))

    def simulate(
        self,
        path: Optional[LoadPathConfig] = None,
        strategy: Optional[SolverStrategy] = None,
        scheme: Optional[LocalScheme] = None,
        divisions: Optional[Sequence[int]] = None,
    ) -> LoadPathResult:
        path = path or self.config.load_path
        assembly, probe = self.build_assembly(divisions)
        solver = self.build_solver(assembly, strategy, scheme)
        initial = solver.initial_state(path.T_start, path.load_start, path.xi_start)
        return solver.run_load_path(path.expand(), initial, probe)

    # ---------- 실행 ----------

    def summarize(self, result: LoadPathResult, strategy: SolverStrategy, scheme: LocalScheme) -> SolveReport:
        steps = [to_step_report(r) for r in result.records]
        return SolveReport(
            name=self.config.name,
            strategy=strategy,
            scheme=scheme,
            total_steps=len(steps),
            total_outer_iterations=sum(s.outer_iterations for s in steps),
            total_local_updates=sum(s.local_updates for s in steps),
            converged=all(s.converged for s in steps),
            wall_time=result.wall_time,
            max_reaction_balance=max((s.reaction_balance for s in steps), default=0.0),
            min_dissipation=min((s.min_dissipation for s in steps), default=0.0),
            steps=steps,
        )

    def run(self, write: bool = True) -> SimulationRunResponse:
        """하중 경로 실행 후 (성공 시) 결과 표와 요약 기록"""
        logger.info(f"🤍1. 실행 시작 - {self.config.name}")
        solver_cfg = self.config.solver
        result = self.simulate()
        rows = [to_result_row(r, self.config.output.record_wall_time) for r in result.records]
        summary = self.summarize(result, solver_cfg.strategy, solver_cfg.scheme)
        if write:
            OutputService(self.config.output).write(rows, summary)
        logger.info(
            f"✅ 실행 완료 - {summary.total_steps} 스텝, 전역 {summary.total_outer_iterations}회, "
            f"국부 {summary.total_local_updates}회"
        )
        return SimulationRunResponse(summary=summary, rows=rows)

    # ---------- 벤치 ----------

    def _attempt(self, path: LoadPathConfig, strategy: SolverStrategy, scheme: LocalScheme) -> bool:
        try:
            self.simulate(path, strategy, scheme)
        except SmaSolverError:
            return False
        return True

    def _bench_entry(
        self,
        strategy: SolverStrategy,
        scheme: LocalScheme,
        divisions: Optional[Sequence[int]] = None,
        search: bool = True,
    ) -> BenchEntry:
        bench = self.config.bench
        entry = BenchEntry(strategy=strategy, scheme=scheme, divisions=list(divisions) if divisions else None)
        started = time.perf_counter()
        try:
            result = self.simulate(strategy=strategy, scheme=scheme, divisions=divisions)
            summary = self.summarize(result, strategy, scheme)
            entry.total_outer_iterations = summary.total_outer_iterations
            entry.total_local_updates = summary.total_local_updates
            entry.wall_time = result.wall_time
            entry.converged = True
        except SmaSolverError as e:
            logger.warning(f"⚠️ 벤치 실행 실패 ({strategy.value}/{scheme.value}): {e.message}")
            entry.wall_time = time.perf_counter() - started
        if not search:
            return entry

        search_path = bench.search_path or self.config.load_path
        if bench.step_grid_T:
            entry.max_step_T = max_step_search(
                lambda s: self._attempt(search_path.with_step(dT=s), strategy, scheme), bench.step_grid_T, "T"
            )
        if bench.step_grid_F:
            entry.max_step_F = max_step_search(
                lambda s: self._attempt(search_path.with_step(dF=s), strategy, scheme), bench.step_grid_F, "F"
            )
        return entry

    @staticmethod
    def _ratios(entries: List[BenchEntry]) -> Dict[str, float]:
        """PP/RM 비율 (같은 기법, 같은 메쉬끼리)"""
        ratios: Dict[str, float] = {}
        pairs: Dict[Tuple[str, str], Dict[SolverStrategy, BenchEntry]] = {}
        for entry in entries:
            mesh_key = "x".join(str(v) for v in entry.divisions) if entry.divisions else "base"
            pairs.setdefault((entry.scheme.value, mesh_key), {})[entry.strategy] = entry
        for (scheme, mesh_key), pair in pairs.items():
            rm = pair.get(SolverStrategy.RETURN_MAPPING)
            pp = pair.get(SolverStrategy.PARALLEL_PROJECTION)
            if rm is None or pp is None or not (rm.converged and pp.converged):
                continue
            prefix = f"{scheme}/{mesh_key}"
            if rm.total_local_updates:
                ratios[f"{prefix}/local_updates"] = pp.total_local_updates / rm.total_local_updates
            if rm.wall_time > 0:
                ratios[f"{prefix}/wall_time"] = pp.wall_time / rm.wall_time
            for name in ("max_step_T", "max_step_F"):
                a, b = getattr(pp, name), getattr(rm, name)
                if not (a and b) or a.failed or b.failed or not b.max_step:
                    continue
                if b.saturated:
                    # RM 한계를 모르면 비율도 정할 수 없음
                    logger.warning(f"⚠️ {prefix}/{name}: RM 이 격자 최대값까지 수렴해 비율 생략")
                    continue
                key = f"{prefix}/{name}_lower_bound" if a.saturated else f"{prefix}/{name}"
                ratios[key] = a.max_step / b.max_step
        return ratios

    def bench(self, schemes: Optional[Sequence[LocalScheme]] = None) -> BenchReport:
        """전략 × 기법 비교, 메쉬 스윕, 최대 스텝 탐색"""
        bench = self.config.bench
        schemes = list(schemes or bench.schemes)
        logger.info(f"🤍1. 벤치 시작 - 전략 {len(bench.strategies)}개 × 기법 {len(schemes)}개")
        entries = [self._bench_entry(strategy, scheme) for scheme in schemes for strategy in bench.strategies]
        if self.config.geometry.kind == ElementKind.HEX8:
            for divisions in bench.mesh_sweep:
                for strategy in bench.strategies:
                    entries.append(self._bench_entry(strategy, schemes[0], divisions, search=False))
        report = BenchReport(name=self.config.name, entries=entries, ratios=self._ratios(entries))
        for key, value in report.ratios.items():
            logger.info(f"📊 PP/RM {key} = {value:.3f}")
        return report

    # ---------- 검증 ----------

    @staticmethod
    def verify(quick: bool = False) -> VerifyReport:
        return VerificationService().run_suite(quick=quick)

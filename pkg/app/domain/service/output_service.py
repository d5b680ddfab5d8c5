"""
결과 표 (CSV) 와 실행 요약 (JSON) 작성
"""
import json
import logging
from pathlib import Path
from typing import Iterable, List

import pandas as pd

from app.config.settings import FLOAT_FORMAT
from app.domain.schema.sim_schema import OutputConfig, ResultRow, SolveReport, StepReport
from app.domain.service.solver_service import StepRecord

logger = logging.getLogger(__name__)

RESULT_COLUMNS = list(ResultRow.model_fields.keys())
_COMPONENTS = ("xx", "yy", "zz", "yz", "xz", "xy")


def to_result_row(record: StepRecord, record_wall_time: bool = False) -> ResultRow:
    """스텝 기록 → ResultRow"""
    values = {
        "step": record.step,
        "time": record.time,
        "T": record.T,
        "load": record.load,
        "probe_u": record.probe_u,
        "xi": record.probe_xi,
        "outer_iterations": record.outcome.outer_iterations,
        "local_updates": record.outcome.local_updates,
        "wall_time": record.outcome.wall_time if record_wall_time else None,
    }
    for name, s, e in zip(_COMPONENTS, record.probe_sigma, record.probe_eps_t):
        values[f"sigma_{name}"] = float(s)
        values[f"eps_t_{name}"] = float(e)
    return ResultRow(**values)


def to_step_report(record: StepRecord) -> StepReport:
    outcome = record.outcome
    return StepReport(
        step=record.step,
        T=record.T,
        load=record.load,
        outer_iterations=outcome.outer_iterations,
        local_updates=outcome.local_updates,
        residual_history=list(outcome.residual_history),
        converged=outcome.converged,
        convergence_order=outcome.convergence_order,
        substeps=outcome.substeps,
        min_dissipation=outcome.min_dissipation,
        reaction_balance=outcome.reaction_balance,
    )


def rows_frame(rows: Iterable[ResultRow], record_wall_time: bool = False) -> pd.DataFrame:
    """고정 열 순서 DataFrame (wall_time 은 요청 시에만)"""
    columns = RESULT_COLUMNS if record_wall_time else [c for c in RESULT_COLUMNS if c != "wall_time"]
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=RESULT_COLUMNS)
    return frame[columns]


class OutputService:
    """출력 디렉터리에 결과 파일 기록 (성공한 실행만)"""

    def __init__(self, config: OutputConfig):
        self.config = config
        self.directory = Path(config.directory)

    @property
    def results_path(self) -> Path:
        return self.directory / self.config.results_file

    @property
    def summary_path(self) -> Path:
        return self.directory / self.config.summary_file

    def write(self, rows: List[ResultRow], summary: SolveReport) -> List[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        frame = rows_frame(rows, self.config.record_wall_time)
        frame.to_csv(self.results_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.summary_path.write_text(
            json.dumps(summary.model_dump(mode="json"), indent=2, ensure_ascii=False), encoding="utf-8"
        )
        logger.info(f"💾 결과 저장 - {self.results_path} ({len(rows)}행), {self.summary_path}")
        return [self.results_path, self.summary_path]

    def write_json(self, name: str, payload: dict) -> Path:
        """벤치/검증 보고서 등 임의 JSON"""
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info(f"💾 {path} 저장")
        return path

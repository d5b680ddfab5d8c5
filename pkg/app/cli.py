"""
SMA 해석기 명령행 진입점

    python -m app.cli run configs/twsme_1d_quadratic.yaml
    python -m app.cli bench configs/bar_3d_benchmark.yaml --compare --schemes all
    python -m app.cli verify --quick
    python -m app.cli run configs/superelastic_1d.yaml --dump-config
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from app.config.loader import dump_config, load_config
from app.config.settings import LOG_LEVEL
from app.domain.controller.simulation_controller import SimulationController
from app.domain.exceptions import ConfigError, SmaSolverError
from app.domain.model.state_model import LocalScheme
from app.domain.schema.sim_schema import BenchReport, SimConfig, VerifyReport
from app.domain.service.output_service import OutputService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2


class CliUsageError(ConfigError):
    """명령행 인자 오류"""


class _Parser(argparse.ArgumentParser):
    """사용법 오류를 종료 코드 1 로"""

    def error(self, message):
        raise CliUsageError(f"사용법 오류: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sma-solver", description="SMA 유한요소 해석기 (return mapping / parallel projection)")
    parser.add_argument("-v", "--verbose", action="store_true", help="반복별 DEBUG 로그 출력")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="설정 파일의 하중 경로 실행")
    run.add_argument("config", type=Path)
    run.add_argument("--dump-config", action="store_true", help="기본값을 채운 설정을 출력하고 종료")

    bench = sub.add_parser("bench", help="전략/기법 비교 벤치")
    bench.add_argument("config", type=Path)
    bench.add_argument("--compare", action="store_true", help="PP/RM 비율 표 출력")
    bench.add_argument("--schemes", default=None, help="all 또는 쉼표 구분 기법 이름")
    bench.add_argument("--dump-config", action="store_true", help="기본값을 채운 설정을 출력하고 종료")

    verify = sub.add_parser("verify", help="검증 스위트 실행")
    verify.add_argument("--quick", action="store_true", help="3D 전역 비교와 차수 적합 생략")
    return parser


def parse_schemes(text: Optional[str]) -> Optional[List[LocalScheme]]:
    if text is None:
        return None
    if text.strip().lower() == "all":
        return list(LocalScheme)
    try:
        return [LocalScheme(name.strip()) for name in text.split(",") if name.strip()]
    except ValueError as e:
        raise CliUsageError(f"알 수 없는 기법: {text} (가능: all, {', '.join(s.value for s in LocalScheme)})") from e


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s - %(message)s",
        stream=sys.stderr,
    )


def write_error(error: SmaSolverError, config: Optional[SimConfig]) -> None:
    """stderr 와 (설정이 있으면) 출력 디렉터리 error.json 에 에러 레코드"""
    record = error.to_record()
    text = json.dumps(record, ensure_ascii=False, indent=2)
    print(text, file=sys.stderr)
    if config is not None:
        directory = Path(config.output.directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "error.json").write_text(text, encoding="utf-8")


# ========== 하위 명령 ==========

def cmd_run(config: SimConfig) -> int:
    response = SimulationController(config).run(write=True)
    summary = response.summary
    last = response.rows[-1] if response.rows else None
    print(f"✅ {summary.name}: {summary.total_steps} steps, outer={summary.total_outer_iterations}, "
          f"local={summary.total_local_updates}, wall={summary.wall_time:.3f}s")
    if last is not None:
        print(f"   final T={last.T:.9g} load={last.load:.9g} xi={last.xi:.9g} u={last.probe_u:.9g}")
    return EXIT_OK


def bench_table(report: BenchReport) -> pd.DataFrame:
    rows = []
    for entry in report.entries:
        rows.append({
            "strategy": entry.strategy.value,
            "scheme": entry.scheme.value,
            "mesh": "x".join(str(v) for v in entry.divisions) if entry.divisions else "config",
            "converged": entry.converged,
            "outer": entry.total_outer_iterations,
            "local": entry.total_local_updates,
            "wall_time": entry.wall_time,
            "max_dT": entry.max_step_T.max_step if entry.max_step_T else None,
            "max_dF": entry.max_step_F.max_step if entry.max_step_F else None,
        })
    return pd.DataFrame(rows)


def max_step_table(report: BenchReport, variable: str = "T") -> pd.DataFrame:
    """기법(행) × 전략(열) 최대 스텝 표, 격자 포화는 '≥', 전부 실패는 '실패'"""
    cells = {}
    for entry in report.entries:
        result = entry.max_step_T if variable == "T" else entry.max_step_F
        if entry.divisions or result is None:
            continue
        if result.failed:
            text = "실패"
        else:
            text = f"{'≥' if result.saturated else ''}{result.max_step:g}"
        cells.setdefault(entry.scheme.value, {})[entry.strategy.value] = text
    return pd.DataFrame.from_dict(cells, orient="index")


def cmd_bench(config: SimConfig, schemes: Optional[List[LocalScheme]], compare: bool) -> int:
    report = SimulationController(config).bench(schemes)
    print(bench_table(report).to_string(index=False))
    for variable in ("T", "F"):
        table = max_step_table(report, variable)
        if not table.empty:
            print()
            print(f"최대 d{variable}")
            print(table.to_string())
    if compare:
        ratios = pd.Series(report.ratios, name="PP/RM", dtype=float)
        print()
        print(ratios.to_string() if not ratios.empty else "비교 가능한 PP/RM 쌍이 없습니다")
    OutputService(config.output).write_json("bench.json", report.model_dump(mode="json"))
    return EXIT_OK


def cmd_verify(quick: bool) -> int:
    report: VerifyReport = SimulationController.verify(quick=quick)
    for check in report.checks:
        measured = "error" if check.measured is None else f"{check.measured:.3e}"
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name:<40} {measured:>12}  (threshold {check.threshold:.1e})"
              + (f"  {check.detail}" if check.detail else ""))
    print("ALL PASSED" if report.passed else "SOME CHECKS FAILED")
    return EXIT_OK if report.passed else EXIT_SOLVER


def main(argv: Optional[List[str]] = None) -> int:
    config: Optional[SimConfig] = None
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        if args.command == "verify":
            return cmd_verify(args.quick)

        schemes = parse_schemes(getattr(args, "schemes", None))
        loaded = load_config(args.config)
        if args.dump_config:
            print(dump_config(loaded), end="")
            return EXIT_OK
        config = loaded
        if args.command == "run":
            return cmd_run(config)
        return cmd_bench(config, schemes, args.compare)
    except SmaSolverError as e:
        logger.error(f"❌ {type(e).__name__}: {e.message}")
        write_error(e, config)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

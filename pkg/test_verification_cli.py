"""
검증 오라클, 설정 로더, 명령행, HTTP API 테스트
"""
import copy
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml
from fastapi.testclient import TestClient

from app import cli
from app.config.loader import dump_config, load_config, parse_config
from app.domain.controller.simulation_controller import SimulationController
from app.domain.exceptions import ConfigError, GlobalConvergenceError, MaterialError
from app.domain.model.material_model import TransformDirection
from app.domain.model.state_model import LocalScheme, SolverStrategy
from app.domain.schema.sim_schema import BenchEntry, BenchReport, MaxStepResult, MaterialConfig, VerifyCheck, VerifyReport
from app.domain.service.material_service import build_material_service
from app.domain.service.output_service import RESULT_COLUMNS
from app.domain.service.solver_service import SolverService
from app.domain.service.verification_service import (
    AnalyticPoint,
    ERROR_FLOOR,
    VerificationService,
    analytic_1d,
    error_metrics,
    fd_check,
    fit_convergence_order,
)
from app.main import app

FWD = TransformDirection.FORWARD
REV = TransformDirection.REVERSE
CONFIG_DIR = Path(__file__).resolve().parent / "configs"


# ========== 1D 해석해와 오차 척도 ==========

class TestAnalytic:
    def test_stress_free_forward(self, solid):
        p = solid.params
        assert analytic_1d(0.0, p.M_s, p, FWD) == (0.0, 0.0)
        assert analytic_1d(0.0, 210.0, p, FWD)[0] == pytest.approx(0.5)
        assert analytic_1d(0.0, p.M_f, p, FWD)[0] == pytest.approx(1.0)
        assert analytic_1d(0.0, 150.0, p, FWD)[0] == 1.0

    def test_stress_free_reverse(self, solid):
        p = solid.params
        assert analytic_1d(0.0, p.A_s, p, REV)[0] == pytest.approx(1.0)
        assert analytic_1d(0.0, p.A_f, p, REV)[0] == pytest.approx(0.0, abs=1e-12)

    def test_stress_shifts_transformation(self, solid):
        p = solid.params
        xi, eps_t = analytic_1d(1.0e8, 240.0, p, FWD)
        assert 0.0 < xi < 1.0
        assert eps_t == pytest.approx(p.H * xi)
        assert analytic_1d(-1.0e8, 240.0, p, FWD)[1] == pytest.approx(-p.H * xi)

    def test_monotone_in_temperature(self, solid):
        p = solid.params
        xs = [analytic_1d(0.0, T, p, FWD)[0] for T in np.linspace(230.0, 190.0, 41)]
        assert np.all(np.diff(xs) >= 0.0)

    def test_quadratic_only(self):
        cosine = build_material_service(MaterialConfig(hardening="cosine"))
        with pytest.raises(MaterialError):
            analytic_1d(0.0, 210.0, cosine.params, FWD)

    def test_error_metrics(self):
        a = AnalyticPoint(220.0, 0.0, 0.1875, 0.0)
        assert error_metrics(a, a) == (0.0, 0.0)
        b = AnalyticPoint(220.0, 0.0, 0.1885, np.array([1e-4, -5e-5, -5e-5, 0, 0, 0]))
        e_xi, e_eps = error_metrics(b, a)
        assert e_xi == pytest.approx(1e-3)
        assert e_eps == pytest.approx(1e-4)


# ========== 중심차분 / 차수 적합 ==========

class TestNumericalOracles:
    def test_fd_check_linear(self, rng):
        A = rng.normal(size=(3, 4))
        x = rng.normal(size=4)
        assert fd_check(lambda v: A @ v, x, A) < 1e-9

    def test_fd_check_detects_wrong_derivative(self):
        assert fd_check(lambda v: v ** 2, np.array([2.0]), np.array([[3.0]])) > 0.1

    def test_fit_convergence_order(self):
        steps = [0.05, 0.1, 0.2, 0.4]
        assert fit_convergence_order(steps, [3.0 * s for s in steps]) == pytest.approx(1.0)
        assert fit_convergence_order(steps, [s ** 2 for s in steps]) == pytest.approx(2.0)


# ========== 검증 스위트 ==========

class TestVerificationSuite:
    def test_fem_checks_pass(self):
        checks = VerificationService().check_fem()
        assert [c.name for c in checks] == ["hex8_patch_test", "bar_stiffness"]
        assert all(c.passed for c in checks)

    def test_partials_checks_pass(self):
        assert all(c.passed for c in VerificationService().check_partials())

    def test_guarded_records_failure(self):
        def broken():
            raise MaterialError("ξ 범위 밖")

        checks = VerificationService._guarded("broken", broken)
        assert len(checks) == 1
        assert not checks[0].passed
        assert checks[0].measured is None
        assert checks[0].detail == "ξ 범위 밖"

    def test_error_record_is_json_safe(self):
        record = GlobalConvergenceError("미수렴", 3, [1.0, float("inf"), float("nan")]).to_record()
        text = json.dumps(record, allow_nan=False)
        assert json.loads(text)["detail"] == {"step": 3, "residual_history": [1.0, None, None]}

    def test_convergence_order_on_rotating_path(self):
        verifier = VerificationService()
        errors = verifier.order_errors()
        assert min(errors) > ERROR_FLOOR
        check = verifier.check_convergence_order()
        assert check.passed, check.detail
        assert 0.8 <= check.measured <= 1.2

    def test_convergence_order_fails_when_unmeasurable(self, monkeypatch):
        verifier = VerificationService()
        monkeypatch.setattr(verifier, "order_errors", lambda: [0.0, 1e-14, 0.0, 1e-13])
        check = verifier.check_convergence_order()
        assert not check.passed
        assert "측정 불가" in check.detail

    def test_mesh_convergence(self):
        verifier = VerificationService()
        sweep = verifier.mesh_convergence((1, 2, 4))
        assert [n for n, _, _ in sweep] == [1, 2, 4]
        for _, e_xi, e_eps in sweep:
            assert e_xi < 1e-3
            assert e_eps < 1e-3 * verifier.uniaxial.params.H


# ========== 설정 로더 ==========

class TestConfigLoader:
    def test_defaults_filled(self, bar_config_dict):
        config = parse_config(bar_config_dict)
        assert config.material.E_A == 32.5e9
        assert config.solver.max_outer == 50
        assert config.output.results_file == "results.csv"
        assert len(config.load_path.expand()) == 100

    def test_dump_round_trip(self, bar_config_dict, write_config):
        config = load_config(write_config(bar_config_dict))
        assert parse_config(yaml.safe_load(dump_config(config))) == config

    def test_validation_errors_are_listed(self, bar_config_dict):
        data = copy.deepcopy(bar_config_dict)
        data["solver"]["scheme"] = "gradient_descent"
        data["material"]["nu"] = 0.7
        with pytest.raises(ConfigError) as exc:
            parse_config(data)
        locs = [err["loc"] for err in exc.value.detail["errors"]]
        assert any(loc.startswith("solver.scheme") for loc in locs)
        assert any(loc.startswith("material") for loc in locs)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")

    def test_shipped_configs_parse(self):
        for name in ("twsme_1d_quadratic", "twsme_1d_cosine", "twsme_1d_exponential", "twsme_1d_smooth",
                     "superelastic_1d", "bar_3d_benchmark"):
            config = load_config(CONFIG_DIR / f"{name}.yaml")
            assert config.load_path.expand()


# ========== 명령행 ==========

class TestCli:
    def test_run_writes_results(self, bar_config_dict, write_config, tmp_path, capsys):
        assert cli.main(["run", str(write_config(bar_config_dict))]) == cli.EXIT_OK
        out_dir = tmp_path / "out"
        frame = pd.read_csv(out_dir / "results.csv")
        assert list(frame.columns) == [c for c in RESULT_COLUMNS if c != "wall_time"]
        assert len(frame) == 100
        assert frame["step"].tolist() == list(range(1, 101))
        assert frame["xi"].max() > 0.99
        assert frame["xi"].iloc[-1] < 1e-6
        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["total_steps"] == 100
        assert summary["converged"] is True
        assert "bar_test" in capsys.readouterr().out

    def test_run_is_deterministic(self, bar_config_dict, write_config, tmp_path):
        path = write_config(bar_config_dict)
        results = tmp_path / "out" / "results.csv"
        assert cli.main(["run", str(path)]) == cli.EXIT_OK
        first = results.read_bytes()
        assert cli.main(["run", str(path)]) == cli.EXIT_OK
        assert results.read_bytes() == first

    def test_dump_config(self, bar_config_dict, write_config, capsys):
        path = write_config(bar_config_dict)
        assert cli.main(["run", str(path), "--dump-config"]) == cli.EXIT_OK
        dumped = yaml.safe_load(capsys.readouterr().out)
        assert dumped["solver"]["e_R"] == 1e-6
        assert parse_config(dumped) == load_config(path)

    def test_malformed_config_writes_nothing(self, bar_config_dict, write_config, tmp_path):
        data = copy.deepcopy(bar_config_dict)
        del data["load_path"]
        assert cli.main(["run", str(write_config(data))]) == cli.EXIT_USAGE
        assert not (tmp_path / "out").exists()

    def test_broken_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("name: [unclosed\n", encoding="utf-8")
        assert cli.main(["run", str(path)]) == cli.EXIT_USAGE

    def test_usage_errors(self, tmp_path):
        assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
        assert cli.main(["run", str(tmp_path / "missing.yaml")]) == cli.EXIT_USAGE
        assert cli.main(["bench", str(tmp_path / "missing.yaml"), "--schemes", "bogus"]) == cli.EXIT_USAGE

    def test_parse_schemes(self):
        assert cli.parse_schemes(None) is None
        assert len(cli.parse_schemes("all")) == 4
        assert [s.value for s in cli.parse_schemes("closest_point, cutting_plane")] == ["closest_point", "cutting_plane"]

    def test_material_error_during_solve_exits_2(self, bar_config_dict, write_config, tmp_path, monkeypatch):
        def broken(self, prev, T, load):
            raise MaterialError("ξ 범위 밖", {"xi": 1.5})

        monkeypatch.setattr(SolverService, "step", broken)
        assert cli.main(["run", str(write_config(bar_config_dict))]) == cli.EXIT_SOLVER
        record = json.loads((tmp_path / "out" / "error.json").read_text(encoding="utf-8"))
        assert record["error"] == "GlobalConvergenceError"
        assert record["detail"]["step"] == 1
        assert "ξ 범위 밖" in record["message"]

    def test_solver_failure_writes_error_record(self, bar_config_dict, write_config, tmp_path, capsys):
        data = copy.deepcopy(bar_config_dict)
        data["solver"] = {"strategy": "return_mapping", "scheme": "closest_point", "max_outer": 1}
        assert cli.main(["run", str(write_config(data))]) == cli.EXIT_SOLVER
        out_dir = tmp_path / "out"
        assert not (out_dir / "results.csv").exists()
        record = json.loads((out_dir / "error.json").read_text(encoding="utf-8"))
        assert record["error"] == "GlobalConvergenceError"
        assert record["detail"]["step"] > 1
        assert "GlobalConvergenceError" in capsys.readouterr().err

    def test_bench(self, bar_config_dict, write_config, tmp_path, capsys):
        data = copy.deepcopy(bar_config_dict)
        data["bench"] = {"step_grid_F": [1.0e8, 2.0e8]}
        assert cli.main(["bench", str(write_config(data)), "--compare"]) == cli.EXIT_OK
        report = json.loads((tmp_path / "out" / "bench.json").read_text(encoding="utf-8"))
        assert [e["strategy"] for e in report["entries"]] == ["return_mapping", "parallel_projection"]
        assert all(e["converged"] for e in report["entries"])
        assert all(e["max_step_F"]["attempts"] for e in report["entries"])
        assert "closest_point/base/local_updates" in report["ratios"]
        assert "parallel_projection" in capsys.readouterr().out

    def test_max_step_table_and_ratios(self):
        def entry(strategy, scheme, max_step, saturated=False, failed=False):
            result = MaxStepResult(variable="T", max_step=max_step, failed=failed, non_monotone=False,
                                   saturated=saturated)
            return BenchEntry(strategy=strategy, scheme=scheme, converged=True, total_local_updates=10,
                              wall_time=1.0, max_step_T=result)

        RM, PP = SolverStrategy.RETURN_MAPPING, SolverStrategy.PARALLEL_PROJECTION
        entries = [
            entry(RM, LocalScheme.CLOSEST_POINT, 1.0),
            entry(PP, LocalScheme.CLOSEST_POINT, 5.0, saturated=True),
            entry(RM, LocalScheme.CUTTING_PLANE, 2.0, saturated=True),
            entry(PP, LocalScheme.CUTTING_PLANE, 2.0, saturated=True),
            entry(RM, LocalScheme.RADIAL_RETURN, 0.5),
            entry(PP, LocalScheme.RADIAL_RETURN, 0.1, failed=True),
        ]
        ratios = SimulationController._ratios(entries)
        assert ratios["closest_point/base/max_step_T_lower_bound"] == pytest.approx(5.0)
        assert "closest_point/base/max_step_T" not in ratios
        assert not any(key.startswith("cutting_plane/base/max_step") for key in ratios)
        assert not any(key.startswith("radial_return/base/max_step") for key in ratios)

        table = cli.max_step_table(BenchReport(name="t", entries=entries, ratios=ratios))
        assert table.loc["closest_point", "return_mapping"] == "1"
        assert table.loc["closest_point", "parallel_projection"] == "≥5"
        assert table.loc["radial_return", "parallel_projection"] == "실패"
        assert cli.max_step_table(BenchReport(name="t", entries=entries, ratios={}), "F").empty

    @pytest.mark.parametrize("passed,code", [(True, cli.EXIT_OK), (False, cli.EXIT_SOLVER)])
    def test_verify_exit_code(self, monkeypatch, capsys, passed, code):
        report = VerifyReport(passed=passed, checks=[
            VerifyCheck(name="hex8_patch_test", passed=passed, measured=1e-12, threshold=1e-8),
            VerifyCheck(name="closure", passed=True, measured=None, threshold=1e-6),
        ])
        monkeypatch.setattr(SimulationController, "verify", staticmethod(lambda quick=False: report))
        assert cli.main(["verify", "--quick"]) == code
        out = capsys.readouterr().out
        assert "hex8_patch_test" in out
        assert ("ALL PASSED" in out) == passed


# ========== HTTP API ==========

@pytest.fixture
def client():
    return TestClient(app)


class TestApi:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "healthy", "service": "sma_solver"}

    def test_materials(self, client):
        response = client.get("/simulation/materials")
        assert response.status_code == 200
        assert response.json()[0]["name"] == "NiTi50"

    def test_run(self, client, bar_config_dict, tmp_path):
        response = client.post("/simulation/run", json=bar_config_dict)
        assert response.status_code == 200
        body = response.json()
        assert body["summary"]["total_steps"] == 100
        assert len(body["rows"]) == 100
        assert body["rows"][-1]["wall_time"] is None
        assert not (tmp_path / "out").exists()

    def test_run_invalid_config(self, client, bar_config_dict):
        data = copy.deepcopy(bar_config_dict)
        data["geometry"]["n_elements"] = 0
        assert client.post("/simulation/run", json=data).status_code == 422

    def test_run_not_converged(self, client, bar_config_dict):
        data = copy.deepcopy(bar_config_dict)
        data["solver"] = {"strategy": "return_mapping", "max_outer": 1}
        response = client.post("/simulation/run", json=data)
        assert response.status_code == 500
        assert response.json()["detail"]["error"] == "GlobalConvergenceError"

    def test_run_material_error_during_solve(self, client, bar_config_dict, monkeypatch):
        def broken(self, prev, T, load):
            raise MaterialError("ξ 범위 밖")

        monkeypatch.setattr(SolverService, "step", broken)
        response = client.post("/simulation/run", json=bar_config_dict)
        assert response.status_code == 500
        assert response.json()["detail"]["error"] == "GlobalConvergenceError"

    def test_verify(self, client, monkeypatch):
        report = VerifyReport(passed=True, checks=[VerifyCheck(name="fem", passed=True, measured=0.0, threshold=1e-8)])
        monkeypatch.setattr(SimulationController, "verify", staticmethod(lambda quick=False: report))
        response = client.post("/simulation/verify", params={"quick": True})
        assert response.status_code == 200
        assert response.json()["passed"] is True

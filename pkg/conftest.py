"""
공용 pytest 픽스처
"""
from pathlib import Path

import numpy as np
import pytest
import yaml

from app.domain.model.state_model import LocalScheme
from app.domain.schema.sim_schema import MaterialConfig
from app.domain.service.local_update_service import LocalUpdateService
from app.domain.service.material_service import build_material_service
from app.domain.service.voigt_service import SOLID, UNIAXIAL


@pytest.fixture(scope="session")
def material_config():
    return MaterialConfig()


@pytest.fixture(scope="session")
def solid(material_config):
    """NiTi50, 6성분 공간"""
    return build_material_service(material_config, SOLID)


@pytest.fixture(scope="session")
def uniaxial(material_config):
    """NiTi50, 단축 공간"""
    return build_material_service(material_config, UNIAXIAL)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def newton(solid):
    return LocalUpdateService(solid, LocalScheme.NEWTON_RAPHSON, e_H=1e-11, max_inner=200)


@pytest.fixture
def bar_config_dict(tmp_path):
    """짧은 1D 초탄성 경로 설정 (dict)"""
    return {
        "name": "bar_test",
        "material": {"preset": "NiTi50"},
        "geometry": {"kind": "bar1d", "length": 1.0, "n_elements": 2, "area": 10.0},
        "load_path": {
            "T_start": 310.0,
            "load_start": 5.0e6,
            "segments": [
                {"T_end": 310.0, "load_end": 5.0e9, "steps": 50},
                {"T_end": 310.0, "load_end": 5.0e6, "steps": 50},
            ],
        },
        "solver": {"strategy": "parallel_projection", "scheme": "closest_point"},
        "output": {"directory": str(tmp_path / "out")},
    }


@pytest.fixture
def write_config(tmp_path):
    """dict → YAML 파일 경로"""

    def _write(data, name: str = "config.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        return path

    return _write

"""
YAML 시뮬레이션 설정 로더
"""
import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import ValidationError

from app.domain.exceptions import ConfigError
from app.domain.schema.sim_schema import SimConfig

logger = logging.getLogger(__name__)


def parse_config(data: Dict[str, Any]) -> SimConfig:
    """dict → SimConfig (검증 실패는 ConfigError)"""
    if not isinstance(data, dict):
        raise ConfigError("설정 최상위는 매핑이어야 합니다")
    try:
        return SimConfig.model_validate(data)
    except ValidationError as e:
        errors = [
            {"loc": ".".join(str(part) for part in err["loc"]), "msg": err["msg"]}
            for err in e.errors()
        ]
        raise ConfigError(f"설정 검증 실패 ({len(errors)}건)", errors) from e


def load_config(path: Union[str, Path]) -> SimConfig:
    """YAML 파일을 읽어 검증된 설정 반환"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"설정 파일이 없습니다: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML 파싱 실패: {path}", [{"loc": "", "msg": str(e)}]) from e
    config = parse_config(data or {})
    logger.info(f"📋 설정 로드 완료 - {path.name} ({config.name})")
    return config


def dump_config(config: SimConfig) -> str:
    """기본값까지 채운 정규화 설정을 YAML 로"""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False, allow_unicode=True)

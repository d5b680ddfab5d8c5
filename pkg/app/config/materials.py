"""
SMA 재료 물성 프리셋 (SI 단위)
"""
from typing import Dict, List, Optional

# --- 1. 프리셋 이름 → 기본 물성 ---
MATERIAL_PRESETS: Dict[str, dict] = {
    # NiTi50 (푸아송비는 표에 없어 0.33 사용)
    "NiTi50": {
        "E_A": 32.5e9,          # 오스테나이트 영률 (Pa)
        "E_M": 23.0e9,          # 마르텐사이트 영률 (Pa)
        "nu": 0.33,             # 푸아송비
        "alpha": 22.0e-6,       # 열팽창계수 (1/K)
        "c": 400.0,             # 비열 (J/kgK)
        "A_s": 241.0,           # 역변태 시작 (K)
        "A_f": 290.0,           # 역변태 종료 (K)
        "M_s": 226.0,           # 정변태 시작 (K)
        "M_f": 194.0,           # 정변태 종료 (K)
        "H": 0.033,             # 최대 변태변형률
        "rho": 6500.0,          # 밀도 (kg/m^3)
        "T0": 300.0,            # 기준 온도 (K)
        "rho_ds0": -11.55e4,    # 엔트로피 차 ρΔs₀ (J/m^3K)
    },
}

# --- 2. 프리셋 이름 → 설명 ---
MATERIAL_DESCRIPTIONS: Dict[str, str] = {
    "NiTi50": "등원자 니켈-티타늄 (TWSME/초탄성 검증용 기준 재료)",
}

# --- 3. 경화 모델 → 기본 지수 (smooth 모델만 사용) ---
DEFAULT_SMOOTH_EXPONENTS: List[float] = [1.0, 1.0, 1.0, 1.0]

# --- 4. 지수 경화 모델 완료 분율 (ξ 99% 도달 온도로 a_e 결정) ---
EXPONENTIAL_COMPLETION = 0.01

DEFAULT_PRESET = "NiTi50"
TOTAL_PRESETS = len(MATERIAL_PRESETS)


def get_material_preset(name: str) -> Optional[dict]:
    """프리셋 이름으로 물성 딕셔너리 조회 (사본 반환)"""
    preset = MATERIAL_PRESETS.get(name)
    return dict(preset) if preset is not None else None


def get_preset_names() -> List[str]:
    """등록된 프리셋 이름 목록"""
    return list(MATERIAL_PRESETS.keys())


def get_material_info() -> List[dict]:
    """프리셋 요약 정보 (API 응답용)"""
    return [
        {"name": name, "description": MATERIAL_DESCRIPTIONS.get(name, ""), "properties": dict(props)}
        for name, props in MATERIAL_PRESETS.items()
    ]

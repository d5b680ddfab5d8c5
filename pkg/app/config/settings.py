import os
from dotenv import load_dotenv
from pathlib import Path

"""
SMA 해석기 설정
"""

# 현재 경로 기준, 루트 탐색
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# 환경 읽기 (기본값: development)
env = os.getenv("ENV", "development")

# 분기해서 환경변수 파일 로드
if env == "production":
    load_dotenv(dotenv_path=BASE_DIR / ".env.production")
else:
    load_dotenv(dotenv_path=BASE_DIR / ".env.development")

# 수렴 판정 설정
E_R = float(os.getenv("SMA_E_R", "1e-6"))  # 전역 잔차 허용오차 (정규화)
E_H = float(os.getenv("SMA_E_H", "1e-6"))  # 국부 잔차 허용오차 (정규화)
MAX_OUTER = int(os.getenv("SMA_MAX_OUTER", "50"))  # 전역 반복 최대 횟수
MAX_INNER = int(os.getenv("SMA_MAX_INNER", "50"))  # 국부 반복 최대 횟수
MAX_HALVINGS = int(os.getenv("SMA_MAX_HALVINGS", "4"))  # 자동 스텝 분할 최대 깊이

# 구성 방정식 수치 설정
HARDENING_ENDPOINT_CLAMP = 1e-9  # acos/log 특이점 회피용 ξ 클램프
# 자기수용 판정 비율: 유효응력 < 비율·Y/H, 역전점 유효 변형률 < 비율·H 이면
# 변태 방향이 정의되지 않으며, 이 구간에서 Λ 는 0 까지 선형으로 줄어든다
SELF_ACCOMMODATION_REL = float(os.getenv("SMA_SELF_ACCOMMODATION_REL", "1e-6"))
SINGULAR_COND_LIMIT = 1e14  # invert6 특이 판정 조건수
SCHUR_SCALAR_TOL = 1e-30  # Schur 스칼라 Q 영 판정

# 반력 평형 검사
REACTION_BALANCE_TOL = 1e-8

# 출력 설정
OUTPUT_DIR = os.getenv("SMA_OUTPUT_DIR", "results")
SIGNIFICANT_DIGITS = 9  # 결과 표 유효숫자
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"

# 로그 레벨
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

import logging
import os

import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config.settings import LOG_LEVEL

# 라우터 import
from app.api.simulation_router import router as simulation_router

load_dotenv()
logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s - %(message)s")
logger = logging.getLogger(__name__)

app = FastAPI(title="SMA FEM Solver Service")

ENV = os.getenv("ENV", "development")  # 기본값 development

if ENV == "production":
    allow_origins = [origin for origin in os.getenv("ALLOW_ORIGINS", "").split(",") if origin]
else:
    allow_origins = [
        "http://localhost:3000",
        "http://localhost:3001",
    ]

app.add_middleware(
    CORSMiddleware,
    allow_origins=allow_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
# 라우터 등록
app.include_router(simulation_router, tags=["SMA 해석"])

logger.info("🤍0. 메인 진입 - SMA 해석 서비스 시작")

if __name__ == "__main__":
    port = int(os.environ.get("PORT", 9006))
    uvicorn.run("app.main:app", host="0.0.0.0", port=port, reload=True)

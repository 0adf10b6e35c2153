import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def _optional_int(name: str):
    value = os.getenv(name)
    return int(value) if value else None


SNP_DATABASE_URL = os.getenv("SNP_DATABASE_URL", "sqlite:///snp_runs.db")
SNP_DEFAULT_HORIZON = _optional_int("SNP_DEFAULT_HORIZON")  # None: 10*(1+total delay)*neurons
SNP_SWEEP_WORKERS = int(os.getenv("SNP_SWEEP_WORKERS", "4"))
SNP_LOG_LEVEL = os.getenv("SNP_LOG_LEVEL", "WARNING").upper()
SNP_RUN_ID_WORDS = int(os.getenv("SNP_RUN_ID_WORDS", "3"))
SNP_FIXTURES_DIR = Path(os.getenv("SNP_FIXTURES_DIR", Path(__file__).resolve().parent / "fixtures"))
WEB_URL = os.getenv("WEB_URL", "*")  # CORS origin, set to the frontend URL in production

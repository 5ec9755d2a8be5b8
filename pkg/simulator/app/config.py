import os
from dotenv import load_dotenv


load_dotenv()


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() not in ("0", "false", "no", "off", "")


DEFAULT_SEED = int(os.getenv("DAO2_SEED", "2024"))
DEFAULT_THRESHOLD = int(os.getenv("DAO2_THRESHOLD", "2"))
DEFAULT_REPETITIONS = int(os.getenv("DAO2_BENCH_REPETITIONS", "10"))

COMMIT_OPEN = _flag("DAO2_COMMIT_OPEN", "1")

LEDGER_URL = os.getenv("DAO2_LEDGER_URL") or None
LOG_LEVEL = os.getenv("DAO2_LOG_LEVEL", "WARNING").upper()

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_REPETITIONS, DEFAULT_SEED, DEFAULT_THRESHOLD

SWEEP_N_VALUES = [3, 5, 7, 10, 15, 20]
DEPTH_CHECKPOINTS = [1, 10, 50, 100, 200, 500, 1000]

# Reference medians (ms) from the original evaluation machine, printed for
# comparison only.
REFERENCE_MODULE_MS: Dict[int, Dict[str, float]] = {
    3: {"dkd": 1.16, "dsag_sender": 4.03, "dsag_receiver": 5.10, "sign": 1.48},
    5: {"dkd": 1.88, "dsag_sender": 6.79, "dsag_receiver": 8.32, "sign": 1.43},
    7: {"dkd": 2.56, "dsag_sender": 9.66, "dsag_receiver": 12.02, "sign": 1.47},
    10: {"dkd": 3.69, "dsag_sender": 14.43, "dsag_receiver": 17.58, "sign": 1.53},
    15: {"dkd": 5.08, "dsag_sender": 20.69, "dsag_receiver": 25.48, "sign": 1.47},
    20: {"dkd": 6.60, "dsag_sender": 28.65, "dsag_receiver": 35.03, "sign": 1.47},
}
REFERENCE_DEPTH_MEAN_MS = 2.49


# ---------------------------
# Configuration
# ---------------------------
class BenchConfig(BaseModel):
    n_values: List[int] = Field(default_factory=lambda: list(SWEEP_N_VALUES))
    t: int = DEFAULT_THRESHOLD
    repetitions: int = Field(default=DEFAULT_REPETITIONS, ge=1)
    seed: int = DEFAULT_SEED
    output: Literal["table", "json"] = "table"

    @model_validator(mode="after")
    def _check_thresholds(self):
        if self.t < 1:
            raise ValueError(f"threshold must be >= 1, got {self.t}")
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        for n in self.n_values:
            if n < self.t:
                raise ValueError(f"every n must be >= t={self.t}, got n={n}")
        return self


# ---------------------------
# Communication accounting
# ---------------------------
class CommBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    dkd_bytes: int
    dsag_sender_bytes: int
    sig_bytes: int
    dsag_receiver_bytes: int
    total: int
    raw_bytes: int = 0

    @model_validator(mode="after")
    def _total_is_sum(self):
        expected = self.dkd_bytes + self.dsag_sender_bytes + self.sig_bytes + self.dsag_receiver_bytes
        if self.total != expected:
            raise ValueError(f"total {self.total} != component sum {expected}")
        return self


# ---------------------------
# Benchmark reports
# ---------------------------
class ModuleTimings(BaseModel):
    dkd_ms: float
    dsag_sender_ms: float
    dsag_receiver_ms: float
    sign_ms: float

    @property
    def phase1_ms(self) -> float:
        return self.dkd_ms + self.dsag_sender_ms + self.sign_ms

    @property
    def phase2_ms(self) -> float:
        return self.dsag_receiver_ms + self.sign_ms


class BenchRow(BaseModel):
    n: int
    timings: ModuleTimings
    phase1_ms: float
    phase2_ms: float
    total_ms: float
    comm: CommBreakdown
    reference_ms: Optional[Dict[str, float]] = None


class LinearFit(BaseModel):
    slope: float
    intercept: float
    r_squared: float


class BenchReport(BaseModel):
    config: BenchConfig
    rows: List[BenchRow]
    dsag_sender_fit: LinearFit
    dsag_receiver_fit: LinearFit
    total_fit: LinearFit
    sign_ratio: float


class DepthPoint(BaseModel):
    depth: int
    per_step_ms: float


class DepthReport(BaseModel):
    depth: int
    n: int
    t: int
    points: List[DepthPoint]
    mean_ms: float
    flatness_ratio: float
    states_identical: bool
    key_changed: bool
    reference_mean_ms: float = REFERENCE_DEPTH_MEAN_MS


class BaselineRow(BaseModel):
    n: int
    t: int
    standard_sa_ms: Optional[float] = None
    plain_ts_ms: Optional[float] = None
    threshold_sa_ms: float
    premium: Optional[float] = None


class BaselineReport(BaseModel):
    rows: List[BaselineRow]


# ---------------------------
# Protocol reports
# ---------------------------
class MessageRecord(BaseModel):
    session_id: str
    dao: str
    sender: int
    kind: str
    raw_len: int
    accounted_len: int
    payload_hex: str


class LedgerEntryView(BaseModel):
    entry_id: int
    status: str
    mode: str
    dest: str
    tag: str
    label: Optional[str] = None
    payment_sig: str
    spend_sig: Optional[str] = None


class DemoReport(BaseModel):
    n1: int
    n2: int
    t: int
    mode: str
    seed: int
    steps: List[str]
    ledger: List[LedgerEntryView]
    messages: List[MessageRecord]
    comm: Optional[CommBreakdown] = None
    receiver_state: Dict[str, str]


class FaultOutcome(BaseModel):
    scenario: str
    detected: bool
    detection: str
    culprit: Optional[int] = None
    completed: bool
    honest_states_consistent: bool
    signature_bytes_produced: int = 0
    detail: str = ""


class DegenerationReport(BaseModel):
    seed: int
    destinations_equal: bool
    offsets_equal: bool
    one_time_keys_equal: bool
    pipeline_signature_valid: bool
    oracle_signature_valid: bool
    dest: str

    @property
    def equivalent(self) -> bool:
        return (
            self.destinations_equal
            and self.offsets_equal
            and self.one_time_keys_equal
            and self.pipeline_signature_valid
            and self.oracle_signature_valid
        )

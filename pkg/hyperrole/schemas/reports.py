from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# ============ Function x chain report ============

class BucketReportRow(BaseModel):
    bucket: str
    chain: str
    tx_count: int
    total_value: float
    first_seen: int
    last_seen: int


# ============ Dataset profile ============

class ProfileDiscrepancy(BaseModel):
    field: str
    observed: int
    expected: int


class DatasetProfileReport(BaseModel):
    """Observed dataset counts against the reference RWA role dataset"""

    observed_transactions: int
    observed_addresses: int
    observed_roles: Dict[str, int]
    expected_transactions: int = 10055
    expected_addresses: int = 815
    expected_roles: Dict[str, int] = Field(
        default_factory=lambda: {"Trader": 520, "Bot": 33, "Treasury": 44, "Other": 218}
    )
    discrepancies: List[ProfileDiscrepancy] = Field(default_factory=list)
    profile_match: bool = False


# ============ Classification ============

class ClassMetrics(BaseModel):
    role: str
    precision: float
    recall: float
    f1: float
    support: int


class EvaluationReport(BaseModel):
    """Macro and weighted scores, per-class breakdown and confusion matrix (rows = truth)"""

    precision: float
    recall: float
    f1: float
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: List[ClassMetrics]
    confusion: List[List[int]]
    n_test: int


class VariantMetrics(BaseModel):
    """One row of the ablation / baseline comparison table"""

    model: str
    precision: float
    recall: float
    f1: float
    accuracy: float
    feature_dim: int


# ============ Synthetic checks ============

class MonotonicityReport(BaseModel):
    rho: float
    degenerate: bool = False
    n_nodes: int
    p_value: Optional[float] = None

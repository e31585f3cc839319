from typing import List

from pydantic import BaseModel, ConfigDict, Field


class TransactionRecord(BaseModel):
    """One decoded on-chain transfer"""

    model_config = ConfigDict(frozen=True)

    chain: str = ""
    token: str = ""
    tx_id: str = ""
    timestamp: int = Field(..., description="UTC seconds since epoch")
    sender: str = Field(..., min_length=1)
    recipient: str = Field(..., min_length=1)
    value: float = Field(..., ge=0, description="Amount in token units")
    function_name: str = ""


class IngestResult(BaseModel):
    """Parsed records plus the number of rows that failed to parse"""

    records: List[TransactionRecord]
    skipped: int = 0


class TokenChainSummary(BaseModel):
    """One row of the cross-chain summary (token, chain)"""

    token: str
    chain: str
    transactions: int
    addresses: int
    first_timestamp: int
    last_timestamp: int
    start: str = Field(..., description="First activity date, YYYY-MM-DD (UTC)")
    end: str = Field(..., description="Last activity date, YYYY-MM-DD (UTC)")

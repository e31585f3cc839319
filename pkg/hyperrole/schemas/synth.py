from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TreeSpec(BaseModel):
    """k-ary tree with a fixed geodesic step length between depths"""

    model_config = ConfigDict(extra="forbid")

    branching: int = Field(3, ge=1)
    depth: int = Field(4, ge=0)
    step_length: float = Field(1.0, gt=0)

    @property
    def node_count(self) -> int:
        if self.branching == 1:
            return self.depth + 1
        return (self.branching ** (self.depth + 1) - 1) // (self.branching - 1)


class PlantedRoleSpec(BaseModel):
    """
    Three-tier planted graph: hubs anchor liquidity, relays bridge hubs and
    traders, traders make sparse low-value transfers.

    Value distributions are log-normal, given as (mean, sigma) of the log.
    """

    model_config = ConfigDict(extra="forbid")

    n_hubs: int = Field(2, gt=0)
    n_relays: int = Field(10, gt=0)
    n_traders: int = Field(100, gt=0)
    p_hub_relay: float = Field(0.9, gt=0, le=1)
    p_relay_trader: float = Field(0.2, gt=0, le=1)
    n_transfers: int = Field(3000, gt=0)
    hub_relay_share: float = Field(0.5, gt=0, lt=1)
    hub_relay_value: Tuple[float, float] = (13.0, 0.1)
    relay_trader_value: Tuple[float, float] = (8.0, 0.8)
    trader_relay_value: Tuple[float, float] = (5.0, 1.0)
    chain: str = "Ethereum"
    token: str = "USDY"
    start_timestamp: int = 1704067200
    span_seconds: int = Field(180 * 86400, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _sigmas_positive(self):
        for mean_sigma in (self.hub_relay_value, self.relay_trader_value, self.trader_relay_value):
            if mean_sigma[1] <= 0:
                raise ValueError("log-normal sigma must be positive")
        return self

import enum
from typing import List

from pydantic import BaseModel, ConfigDict


class Role(str, enum.Enum):
    """Coarse economic role of an address"""

    TRADER = "Trader"
    BOT = "Bot"
    TREASURY = "Treasury"
    OTHER = "Other"


# Fixed class order for the classifier output layer and prediction files
ROLE_ORDER: List[Role] = [Role.TRADER, Role.BOT, Role.TREASURY, Role.OTHER]
ROLE_INDEX = {role: i for i, role in enumerate(ROLE_ORDER)}


class LabeledAddress(BaseModel):
    model_config = ConfigDict(frozen=True)

    address: str
    role: Role
    source_name_tag: str = ""


class LabelLoadResult(BaseModel):
    labels: List[LabeledAddress]
    duplicates: int = 0

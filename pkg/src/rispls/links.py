"""Link categories shared by the channel, analytic and simulation layers."""
from enum import Enum


class LinkKind(str, Enum):
    LOS = "LoS"
    NLOS = "NLoS"
    RIS_REFLECTED = "RisReflected"
    RIS_WITH_DIRECT = "RisWithDirect"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.value.lower() == key or kind.name.lower().replace("_", "") == key:
                return kind
        raise ValueError(f"unknown link kind {value!r}")

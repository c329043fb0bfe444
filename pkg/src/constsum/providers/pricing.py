"""Token pricing and cost accounting.

All money values are Decimal quantized to 4 decimal places; floats never
enter the arithmetic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

CENT_PRECISION = Decimal("0.0001")


@dataclass(frozen=True)
class ModelPrice:
    input_per_1k: Decimal
    output_per_1k: Decimal

    def __post_init__(self) -> None:
        if self.input_per_1k < 0 or self.output_per_1k < 0:
            raise ValueError("prices must be >= 0")


DEFAULT_PRICING: dict[str, ModelPrice] = {
    "gpt-3.5-turbo": ModelPrice(Decimal("0.0015"), Decimal("0.002")),
    "gpt-3.5-turbo-16k": ModelPrice(Decimal("0.003"), Decimal("0.004")),
}


def pricing_from_config(raw: dict) -> dict[str, ModelPrice]:
    """Parse a {model: {input_per_1k, output_per_1k}} mapping of strings."""
    table = {}
    for model, prices in raw.items():
        table[model] = ModelPrice(
            Decimal(str(prices["input_per_1k"])),
            Decimal(str(prices["output_per_1k"])),
        )
    return table


@dataclass(frozen=True)
class LedgerEntry:
    model: str
    prompt_tokens: int
    completion_tokens: int
    cost: Decimal


@dataclass
class CostLedger:
    pricing: dict[str, ModelPrice] = field(default_factory=lambda: dict(DEFAULT_PRICING))
    entries: list[LedgerEntry] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, model: str, prompt_tokens: int, completion_tokens: int) -> LedgerEntry:
        if model not in self.pricing:
            raise KeyError(f"no pricing for model {model!r}")
        price = self.pricing[model]
        cost = (
            Decimal(prompt_tokens) / 1000 * price.input_per_1k
            + Decimal(completion_tokens) / 1000 * price.output_per_1k
        ).quantize(CENT_PRECISION, rounding=ROUND_HALF_EVEN)
        entry = LedgerEntry(model, prompt_tokens, completion_tokens, cost)
        with self._lock:
            self.entries.append(entry)
        return entry

    @property
    def total(self) -> Decimal:
        return sum((e.cost for e in list(self.entries)), Decimal("0.0000"))

    def as_dict(self) -> dict:
        entries = list(self.entries)
        return {
            "total": str(sum((e.cost for e in entries), Decimal("0.0000"))),
            "entries": [
                {
                    "model": e.model,
                    "prompt_tokens": e.prompt_tokens,
                    "completion_tokens": e.completion_tokens,
                    "cost": str(e.cost),
                }
                for e in entries
            ],
        }

"""Service configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8421
    model: str = "lexicon"  # "lexicon" or "external:<module>:<factory>"
    lexicon_path: str | None = None
    max_batch_size: int = 16
    input_budget: int = 512
    output_budget: int = 128

    def __post_init__(self):
        if self.input_budget <= 0 or self.output_budget <= 0:
            raise ValueError("token budgets must be positive")
        if self.max_batch_size <= 0:
            raise ValueError("max batch size must be positive")

"""Simulated network latency: per-connection FIFO delay with jitter and
probabilistic drops on droppable (state) messages only."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LatencyModel:
    base_delay_ms: float = 0.0
    jitter_ms: float = 0.0  # uniform half-width
    drop_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self._last_delivery = 0.0

    @property
    def enabled(self) -> bool:
        return self.base_delay_ms > 0 or self.jitter_ms > 0 or self.drop_rate > 0

    def schedule(self, now: float, droppable: bool = False) -> float | None:
        """Delivery timestamp for a message sent at `now` (seconds), or None
        if dropped. Delivery order per connection is FIFO: a later message
        never overtakes an earlier one."""
        if droppable and self.drop_rate > 0 and self.rng.random() < self.drop_rate:
            return None
        delay = self.base_delay_ms
        if self.jitter_ms > 0:
            delay += float(self.rng.uniform(-self.jitter_ms, self.jitter_ms))
        at = now + max(0.0, delay) / 1000.0
        at = max(at, self._last_delivery)
        self._last_delivery = at
        return at

"""Deterministic random streams.

Every sampled path owns a counter-based stream keyed by
``(master_seed, stream_index)``.  Streams with distinct keys are
statistically independent, so ensembles can be chunked or threaded in any
order and still produce bit-identical output.
"""

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: one per simulated path."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        # Philox takes a 128-bit key; pack (seed, index) into the two words.
        key = ((self.master_seed & _MASK64) << 64) | (self.stream_index & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)

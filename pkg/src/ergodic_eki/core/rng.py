"""
Reproducible random streams.

Every stream is a Philox counter-based generator keyed by a master seed and
a stream path (for instance ``(generation, member)``), so streams never
overlap and do not depend on evaluation order.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

StreamId = Union[int, Tuple[int, ...]]


@dataclass(frozen=True)
class RngStream:
    """Identifies one random stream by (master_seed, stream_id)."""
    master_seed: int
    stream_id: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ValueError("master seed must fit in 64 unsigned bits")
        stream_id = self.stream_id
        if isinstance(stream_id, (int, np.integer)):
            stream_id = (int(stream_id),)
        object.__setattr__(self, "stream_id", tuple(int(i) for i in stream_id))

    def child(self, *ids: int) -> 'RngStream':
        """Stream whose path extends this one."""
        return RngStream(self.master_seed, self.stream_id + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seed_sequence = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(seed_sequence))


def gaussian_increments(rng: RngStream, count: int) -> np.ndarray:
    """``count`` i.i.d. standard normal draws from the start of the stream."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return rng.generator().standard_normal(count)


# Named sub-streams used by the runner and the EKI loop.
STREAM_TRUTH = 0
STREAM_ENSEMBLE_INIT = 1
STREAM_FORWARD = 2
STREAM_PERTURB = 3
STREAM_VALIDATION = 4
STREAM_INITIAL_STATE = 5

# -*- coding: utf-8 -*-
""" Random Streams.

All randomness of a run flows from a single 64-bit seed. Each consumer asks for a
named stream; streams are independent Philox generators keyed on the seed and the
stream name, so drawing more from one stream never shifts another.
"""

import zlib

import numpy as np

__all__ = ["RandomStreams", "stream_key"]


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class RandomStreams:
    """ Random Streams class.

    Example:
        streams = RandomStreams(7)
        skill_rng = streams.stream("skill")
        env_rng = streams.stream("env", 3)   # third environment instance
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2 ** 64:
            raise ValueError("Seed must fit in an unsigned 64-bit integer, got {}".format(seed))
        self.seed = int(seed)

    def stream(self, name: str, *index: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(stream_key(name),) + tuple(int(i) for i in index))
        return np.random.Generator(np.random.Philox(sequence))

    def child_seed(self, name: str, *index: int) -> int:
        """ Derive a plain integer seed, e.g. for an environment reset. """
        return int(self.stream(name, *index).integers(0, 2 ** 63))

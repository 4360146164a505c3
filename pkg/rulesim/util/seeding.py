from typing import Tuple, Union
import hashlib

import numpy as np
import torch

SeedTag = Union[str, int]


def _tag_to_int(tag: SeedTag) -> int:
    if isinstance(tag, int):
        return tag
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_seed(seed: int, *tags: SeedTag) -> int:
    """Child seed for one stage of a run, e.g. ``derive_seed(seed, "batch", 17)``.

    Uses numpy's SeedSequence so that stages are statistically independent and
    the mapping is identical on every platform.
    """
    spawn_key: Tuple[int, ...] = tuple(_tag_to_int(tag) for tag in tags)
    sequence = np.random.SeedSequence(int(seed) % 2**64, spawn_key=spawn_key)
    return int(sequence.generate_state(1, np.uint64)[0])


def torch_generator(seed: int) -> torch.Generator:
    # manual_seed accepts the full unsigned 64 bit range
    generator = torch.Generator()
    generator.manual_seed(int(seed) % 2**64)
    return generator

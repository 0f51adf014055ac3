import hashlib
import math
from typing import Union

import psutil

from logger_config import get_logger

logger = get_logger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF
# splitmix64 constants (Steele, Lea & Flood); any language with 64-bit unsigned
# arithmetic reproduces the same streams
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One splitmix64 finalization step on a 64-bit integer."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def stream_code(tag: Union[int, str]) -> int:
    """Integer tags pass through; string tags become the first 8 bytes of their BLAKE2b digest."""
    if isinstance(tag, int):
        return tag & MASK64
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(base_seed: int, replication_index: int, stream_tag: Union[int, str]) -> int:
    """Avalanche-mix (base seed, replication index, stream) into a 64-bit seed."""
    h = splitmix64(base_seed & MASK64)
    h = splitmix64(h ^ (replication_index & MASK64))
    return splitmix64(h ^ stream_code(stream_tag))


def default_iterations(n: int) -> int:
    """ceil(ln n), at least one iteration."""
    return max(1, math.ceil(math.log(n))) if n > 1 else 1


def check_memory_usage():
    """Log a warning when the process holds more than 1GB."""
    if psutil.Process().memory_info().rss > 1024 ** 3:
        logger.warning("High memory usage detected")

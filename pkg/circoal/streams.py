"""
Seeded, order-independent random streams for replicate-parallel Monte Carlo.
"""

# pylint: disable=logging-fstring-interpolation

import os
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

from circoal.constants import CHUNK_SIZE, DEFAULT_SEED, SEED_ENV_VAR
from circoal.exceptions import InvalidParameter
from circoal.logger import logger

T = TypeVar("T")


def resolve_seed(seed: Optional[int] = None) -> int:
    """Explicit seed, else the CIRCOAL_SEED environment variable, else the default seed"""
    if seed is None:
        from_env = os.environ.get(SEED_ENV_VAR)
        if from_env is None or from_env.strip() == "":
            return DEFAULT_SEED
        try:
            seed = int(from_env)
        except ValueError as err:
            raise InvalidParameter(
                f"{SEED_ENV_VAR} must be an integer, got {from_env!r}", parameter="seed"
            ) from err
    if seed < 0:
        raise InvalidParameter(f"Seeds must be non-negative, got {seed}", parameter="seed")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream labelled (seed, *key).

    Distinct keys give statistically independent streams, whatever order they are used in.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


def chunk_sizes(reps: int, chunk_size: int = CHUNK_SIZE) -> list[int]:
    """Split reps into consecutive chunks; the split depends on reps only"""
    if reps < 1:
        raise InvalidParameter(f"reps must be positive, got {reps}", parameter="reps")
    full, rest = divmod(reps, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def run_chunks(
    job: Callable[[np.random.Generator, int], T],
    reps: int,
    seed: int,
    threads: Optional[int] = None,
    chunk_size: int = CHUNK_SIZE,
    stream_key: Sequence[int] = (),
) -> list[T]:
    """Run `job(rng, size)` on every chunk of replicates and return results in chunk order.

    Chunk i always draws from stream(seed, *stream_key, i), so results do not depend on
    `threads`; distinct stream keys give independent families of chunks.
    `threads=None` uses every available core.
    """
    sizes = chunk_sizes(reps, chunk_size)
    logger.debug(f"Running {reps} replicates in {len(sizes)} chunks (seed {seed})")
    if len(sizes) == 1 or threads == 1:
        return [
            job(stream(seed, *stream_key, index), size) for index, size in enumerate(sizes)
        ]
    return Parallel(n_jobs=-1 if threads is None else threads, prefer="threads")(
        delayed(job)(stream(seed, *stream_key, index), size)
        for index, size in enumerate(sizes)
    )

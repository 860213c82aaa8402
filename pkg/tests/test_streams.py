"""Tests for seeding and chunked execution"""

import numpy as np
import pytest

from circoal.constants import DEFAULT_SEED, SEED_ENV_VAR
from circoal.exceptions import InvalidParameter
from circoal.streams import chunk_sizes, resolve_seed, run_chunks, stream


def test_resolve_seed_precedence(monkeypatch):
    """Explicit seed, then the environment, then the default"""
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert resolve_seed() == DEFAULT_SEED

    monkeypatch.setenv(SEED_ENV_VAR, "42")
    assert resolve_seed() == 42
    assert resolve_seed(7) == 7

    monkeypatch.setenv(SEED_ENV_VAR, "  ")
    assert resolve_seed() == DEFAULT_SEED


@pytest.mark.parametrize(
    "seed,env",
    [
        (None, "not-a-number"),
        (-1, None),
    ],
)
def test_resolve_seed_errors(monkeypatch, seed, env):
    """Seeds must be non-negative integers"""
    if env is None:
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    else:
        monkeypatch.setenv(SEED_ENV_VAR, env)
    with pytest.raises(InvalidParameter) as err:
        resolve_seed(seed)

    assert err.value.parameter == "seed"


def test_streams_are_keyed():
    """The same key reproduces a stream and different keys give different draws"""
    first = stream(1, 0).random(4)

    assert np.array_equal(first, stream(1, 0).random(4))
    assert not np.array_equal(first, stream(1, 1).random(4))
    assert not np.array_equal(first, stream(2, 0).random(4))
    assert not np.array_equal(first, stream(1, 1, 0).random(4))


@pytest.mark.parametrize(
    "reps,chunk_size,expected",
    [
        (2500, 1024, [1024, 1024, 452]),
        (1024, 1024, [1024]),
        (3, 1024, [3]),
    ],
)
def test_chunk_sizes(reps, chunk_size, expected):
    """Chunks only depend on the replicate count"""
    assert chunk_sizes(reps, chunk_size) == expected


def test_chunk_sizes_rejects_empty_runs():
    """At least one replicate is needed"""
    with pytest.raises(InvalidParameter):
        chunk_sizes(0)


@pytest.mark.parametrize("threads", [None, 1, 3])
def test_run_chunks_does_not_depend_on_threads(threads):
    """Chunk i always draws from the stream (seed, i)"""

    def job(rng, size):
        return rng.standard_normal(size)

    expected = np.concatenate([stream(11, i).standard_normal(n) for i, n in enumerate([4, 4, 2])])
    result = np.concatenate(run_chunks(job, 10, 11, threads=threads, chunk_size=4))

    assert np.array_equal(result, expected)


def test_run_chunks_stream_key():
    """A stream key selects an independent family of chunks"""

    def job(rng, size):
        return rng.random(size)

    plain = run_chunks(job, 5, 3, threads=1)[0]
    keyed = run_chunks(job, 5, 3, threads=1, stream_key=(1,))[0]

    assert np.array_equal(keyed, stream(3, 1, 0).random(5))
    assert not np.array_equal(plain, keyed)

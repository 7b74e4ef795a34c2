import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traffic5g import _fallback, kernels
from traffic5g.rng import RngStream

BACKENDS = kernels.available_backends()

# Random123 known-answer vectors for Philox4x32-10: (counter, key) -> output words
KNOWN_ANSWERS = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expected", KNOWN_ANSWERS)
def test_philox_known_answers(ctr, key, expected):
    block = ctr[0] | (ctr[1] << 32)
    stream = ctr[2] | (ctr[3] << 32)
    seed = key[0] | (key[1] << 32)
    words = _fallback.philox4x32(np.array([block]), np.array([stream]), seed)
    assert tuple(int(w[0]) for w in words) == expected


def test_philox_matches_randomgen():
    randomgen = pytest.importorskip("randomgen")
    seed = 0x0123456789ABCDEF
    bg = randomgen.Philox(key=np.array([seed], dtype=np.uint64),
                          counter=np.array([0, 0], dtype=np.uint64), number=4, width=32)
    raw = bg.random_raw(4 * 8).astype(np.uint64)
    # randomgen increments the counter before its first block
    words = _fallback.philox4x32(np.arange(1, 9, dtype=np.uint64), np.zeros(8, np.uint64), seed)
    ours = np.stack(words, axis=1).ravel()
    np.testing.assert_array_equal(ours, raw)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_uniforms_open_unit_interval(name):
    u = BACKENDS[name].uniforms(7, 3, 0, 200_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


@pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
def test_backends_bit_identical_uniforms():
    for seed, stream, start, n in [(0, 0, 0, 1000), (1, 5, 3, 4097), (2 ** 64 - 1, 2 ** 40, 11, 17)]:
        a = BACKENDS["python"].uniforms(seed, stream, start, n)
        b = BACKENDS["compiled"].uniforms(seed, stream, start, n)
        assert a.tobytes() == b.tobytes()


@settings(max_examples=40, deadline=None)
@given(start=st.integers(0, 300), n=st.integers(0, 300), stream=st.integers(0, 2 ** 64 - 1))
def test_uniforms_windows_are_slices(start, n, stream):
    for be in BACKENDS.values():
        whole = be.uniforms(99, stream, 0, start + n)
        np.testing.assert_array_equal(be.uniforms(99, stream, start, n), whole[start:])


def test_stream_reproducible():
    a = RngStream(42, 3).random(1000)
    b = RngStream(42, 3).random(1000)
    assert a.tobytes() == b.tobytes()


def test_sequential_draws_continue_stream():
    r = RngStream(5, 1)
    parts = np.concatenate([r.random(10), r.random((3, 4)).ravel(), [r.random()]])
    np.testing.assert_array_equal(parts, RngStream(5, 1).random(23))
    assert r.position == 23


def test_distinct_streams_uncorrelated():
    a = RngStream(1, 0).random(100_000)
    b = RngStream(1, 1).random(100_000)
    c = RngStream(2, 0).random(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.01


def test_advance_and_spawn():
    r = RngStream(9, 0)
    r.advance(10)
    np.testing.assert_array_equal(r.random(5), RngStream(9, 0).random(15)[10:])
    child = r.spawn(4)
    assert (child.seed, child.stream_index, child.position) == (9, 4, 0)


@pytest.mark.parametrize("kwargs", [dict(seed=-1), dict(seed=2 ** 64), dict(seed=0, stream_index=-2)])
def test_stream_rejects_out_of_range(kwargs):
    with pytest.raises(ValueError):
        RngStream(**kwargs)

import collections

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerate_codebook
from satnl.shaping import (
    AmplitudeAlphabet,
    PasFrame,
    bits_to_int,
    build_codebook,
    dm_decode,
    dm_encode,
    empirical_amplitude_distribution,
    int_to_bits,
    lut_size_bits,
    pas_map,
)

CB64 = build_codebook(AmplitudeAlphabet.for_qam(64), 4, 5)
CB256 = build_codebook(AmplitudeAlphabet.for_qam(256), 4, 9)


def as_tuples(cb):
    return [tuple(e) for e in cb.entries.tolist()]


@pytest.mark.parametrize("M,k", [(64, 5), (256, 9), (64, 0), (16, 3), (256, 12)])
def test_codebook_matches_enumeration(M, k):
    levels = AmplitudeAlphabet.for_qam(M).levels
    kept, _ = enumerate_codebook(levels, 4, k)
    assert as_tuples(build_codebook(AmplitudeAlphabet(levels), 4, k)) == kept


def test_64qam_energy_shells():
    counts = collections.Counter(CB64.energies.tolist())
    assert counts == {4: 1, 12: 4, 20: 6, 28: 8, 36: 13}


def test_256qam_boundary_shell_is_cut():
    # 13 of the 42 blocks of energy 164 make it into the codebook
    assert CB256.energies.max() == 164
    assert np.count_nonzero(CB256.energies == 164) == 13


def test_k_zero_keeps_the_all_ones_block():
    cb = build_codebook(AmplitudeAlphabet.for_qam(64), 4, 0)
    assert as_tuples(cb) == [(1, 1, 1, 1)]
    assert lut_size_bits(cb) == (8, 0)


def test_k_too_large_rejected():
    with pytest.raises(ValueError):
        build_codebook(AmplitudeAlphabet.for_qam(64), 4, 9)


@pytest.mark.parametrize("levels", [(1, 3, 5), (0, 1), (3, 1), ()])
def test_bad_alphabets(levels):
    with pytest.raises(ValueError):
        AmplitudeAlphabet(levels)


def test_dm_examples():
    assert dm_encode(CB64, [0, 0, 0, 0, 0]) == (1, 1, 1, 1)
    assert dm_encode(CB64, [1, 1, 1, 1, 1]) == (5, 3, 1, 1)
    assert dm_decode(CB64, (7, 7, 7, 7)) is None
    assert dm_decode(CB64, (1, 3, 3, 5)) is None


def test_dm_malformed_input():
    with pytest.raises(ValueError):
        dm_encode(CB64, [0, 1])
    with pytest.raises(ValueError):
        dm_decode(CB64, (1, 1, 1))
    with pytest.raises(ValueError):
        dm_decode(CB64, (1, 2, 1, 1))


@pytest.mark.property
@pytest.mark.parametrize("cb", [CB64, CB256], ids=["64", "256"])
def test_dm_round_trip_all_indices(cb):
    for i in range(2**cb.k_bits):
        bits = int_to_bits(i, cb.k_bits)
        assert np.array_equal(dm_decode(cb, dm_encode(cb, bits)), bits)


@pytest.mark.property
@given(st.lists(st.integers(0, 1), min_size=1, max_size=20))
def test_bit_integer_round_trip(bits):
    assert int_to_bits(bits_to_int(bits), len(bits)).tolist() == bits


@pytest.mark.parametrize(
    "M,k,tx,rx",
    [(64, 5, 256, 1280), (256, 9, 6144, 36864), (64, 0, 8, 0), (16, 4, 16 * 4, 16 * 4)],
)
def test_lut_sizes(M, k, tx, rx):
    assert lut_size_bits(build_codebook(AmplitudeAlphabet.for_qam(M), 4, k)) == (tx, rx)


def test_rates():
    assert CB64.rate_per_2d == 4.5
    assert CB256.rate_per_2d == 6.5


def test_pas_all_zero_frame():
    frame = pas_map(CB64, np.zeros(9, np.uint8))
    assert frame.values.tolist() == [[1, 1, 1, 1]]
    frame = pas_map(CB64, [1, 1, 1, 1, 1, 0, 1, 0, 1])
    assert frame.values.tolist() == [[5, -3, 1, -1]]


@pytest.mark.parametrize("n", [0, 8, 10])
def test_pas_rejects_partial_frames(n):
    with pytest.raises(ValueError):
        pas_map(CB64, np.zeros(n))


def test_codebook_marginal():
    p = empirical_amplitude_distribution(CB64.entries, CB64.alphabet.levels)
    np.testing.assert_array_equal(p * 128, [68, 44, 16, 0])


def test_uniform_bits_give_codebook_marginal():
    rng = np.random.default_rng(3)
    frames = pas_map(CB64, rng.integers(0, 2, 9 * 20000))
    p = empirical_amplitude_distribution(frames, CB64.alphabet.levels)
    want = np.array([68, 44, 16, 0]) / 128
    sigma = np.sqrt(want * (1 - want) / (4 * 20000))
    assert np.all(np.abs(p - want) <= 4 * sigma + 1e-12)
    # signs are uniform and independent of the amplitudes
    assert abs(frames.signs.mean()) < 4 / np.sqrt(frames.signs.size)


def test_empirical_distribution_needs_data():
    with pytest.raises(ValueError):
        empirical_amplitude_distribution(np.zeros((0, 4)), (1, 3))


def test_pas_frame_accessors():
    f = PasFrame(np.zeros((1, 5)), np.array([[0, 1, 1, 0]]), np.array([[1, 3, 5, 7]]))
    assert len(f) == 1
    assert f.values.tolist() == [[1, -3, -5, 7]]


@pytest.mark.property
@given(st.sampled_from([16, 64, 256]), st.data())
def test_codebook_invariants(M, data):
    alphabet = AmplitudeAlphabet.for_qam(M)
    k = data.draw(st.integers(0, 4 * alphabet.bits_per_amplitude))
    cb = build_codebook(alphabet, 4, k)
    e = cb.energies
    assert len(cb.entries) == 2**k
    assert len(set(as_tuples(cb))) == 2**k
    assert np.all(np.diff(e) >= 0)
    # nothing left out has lower energy than the largest kept block
    kept = set(as_tuples(cb))
    left_out = [b for b in enumerate_codebook(alphabet.levels, 4, 0)[1] + [(1,) * 4] if b not in kept]
    if left_out:
        assert min(sum(a * a for a in b) for b in left_out) >= e.max()
    # mean energy never exceeds that of uniform amplitudes
    assert e.mean() <= 4 * np.mean(np.square(alphabet.levels)) + 1e-9
    # the inverse table is a bijection onto the codebook
    assert sorted(cb.inverse[cb.inverse >= 0].tolist()) == list(range(2**k))

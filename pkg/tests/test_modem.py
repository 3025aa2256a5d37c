import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from satnl import modem
from satnl.channel import FiberSpec
from satnl.shaping import AmplitudeAlphabet, build_codebook
from satnl.signal import FilterSpec, Waveform, apply_filter_freq, dispersion_operator, out_of_band_fraction

C64, C256, C4 = modem.Constellation(64), modem.Constellation(256), modem.Constellation(4)
CB64 = build_codebook(AmplitudeAlphabet.for_qam(64), 4, 5)
CB256 = build_codebook(AmplitudeAlphabet.for_qam(256), 4, 9)


def frame(n, const=C64, cb=None, seed=0):
    return modem.random_frame(n, const, cb, np.random.default_rng(seed))


@pytest.mark.property
@pytest.mark.parametrize("const", [C4, C64, C256], ids=["4", "64", "256"])
def test_gray_neighbours_differ_in_one_bit(const):
    lab = const.rail_labels
    assert np.all(np.sum(lab[1:] != lab[:-1], axis=1) == 1)
    pts, labels = const.points()
    assert len({tuple(r) for r in labels.tolist()}) == const.M
    # nearest horizontal/vertical neighbours on the grid differ in one bit
    L = const.rail_levels.size
    grid = labels.reshape(L, L, -1)
    assert np.all(np.sum(grid[1:] != grid[:-1], axis=2) == 1)
    assert np.all(np.sum(grid[:, 1:] != grid[:, :-1], axis=2) == 1)
    assert np.isclose(np.mean(np.abs(pts) ** 2), 1.0)


@pytest.mark.parametrize("M", [8, 32, 9, 1])
def test_non_square_orders_rejected(M):
    with pytest.raises(ValueError):
        modem.Constellation(M)


def test_all_zero_bits_map_to_the_corner():
    f = modem.qam_modulate_uniform(np.zeros(24, np.uint8), C64)
    np.testing.assert_allclose(f.symbols[:, 0], (-7 - 7j) / np.sqrt(42))


def test_uniform_bit_count_checked():
    with pytest.raises(ValueError):
        modem.qam_modulate_uniform(np.zeros(23), C64)


@pytest.mark.property
@pytest.mark.parametrize("cb,energy", [(CB64, 13.5), (CB256, 54.3125)])
def test_shaped_normalization_over_all_composite_points(cb, energy):
    assert modem.shaped_energy(cb) == energy
    const = modem.Constellation(4 * cb.alphabet.size**2)
    bits = [
        list(map(int, np.binary_repr(i, cb.k_bits))) + list(s)
        for i in range(2**cb.k_bits)
        for s in itertools.product((0, 1), repeat=4)
    ]
    f = modem.pas_modulate(cb, np.array(bits).ravel(), const)
    assert np.isclose(np.mean(np.abs(f.symbols) ** 2), 1.0, atol=1e-12)


def test_pas_rejects_mismatched_alphabet():
    with pytest.raises(ValueError):
        modem.pas_modulate(CB64, np.zeros(9), C256)


@pytest.mark.property
@pytest.mark.parametrize("cb,const", [(None, C64), (None, C256), (CB64, C64), (CB256, C256)])
def test_hard_decision_round_trip(cb, const):
    f = frame(2000, const, cb)
    labels, valid = modem.hard_decision_bits(f.symbols, f)
    assert valid.all()
    assert np.array_equal(labels, f.labels)


def test_hard_decision_flags_non_codewords():
    f = frame(1, C64, CB64)
    off = np.full((2, 1), (7 + 7j) * f.scale)
    _, valid = modem.hard_decision_bits(off, f)
    assert not valid[0]


def test_coded_labels_equal_labels_for_uniform():
    f = frame(500, C256)
    assert np.array_equal(f.coded_labels, f.labels)


def test_tx_spectrum_confined_to_rrc_band():
    f = frame(2048, C64, CB64)
    w = modem.tx_waveform(f, 8, 0.05, 100e9)
    assert out_of_band_fraction(w, 52.5e9) < 1e-8
    assert np.isclose(np.mean(np.sum(np.abs(w.samples) ** 2, axis=0)), 1.0)


def test_wide_dac_is_transparent():
    f = frame(512, C64)
    a = modem.tx_waveform(f, 8, 0.05, 100e9, dac_cutoff=55e9)
    b = modem.tx_waveform(f, 8, 0.05, 100e9, dac_cutoff=None)
    assert np.array_equal(a.samples, b.samples)


def test_zero_symbols_give_zero_waveform():
    f = frame(16, C64)
    z = modem.TxFrame(np.zeros_like(f.symbols), f.labels, C64, None, f.scale)
    assert not np.any(modem.tx_waveform(z, 8, 0.05, 100e9).samples)


def test_back_to_back_front_end():
    f = frame(4096, C256, CB256)
    w = modem.tx_waveform(f, 8, 0.05, 100e9, 55e9)
    rx, c = modem.rx_frontend(w, f, 8, 0.05, 55e9)
    assert np.max(np.abs(rx - f.symbols)) < 1e-9


def test_dispersion_compensated_exactly():
    f = frame(2048, C64)
    w = modem.tx_waveform(f, 8, 0.05, 100e9)
    b2l = FiberSpec(33.0).beta2 * 33.0
    h = dispersion_operator(w.freqs(), b2l, 1.0)
    disp = w.with_samples(np.fft.ifft(np.fft.fft(w.samples, axis=-1) * h, axis=-1) * 1.7 * np.exp(0.4j))
    rx, c = modem.rx_frontend(disp, f, 8, 0.05, 55e9, b2l)
    assert np.max(np.abs(rx - f.symbols)) < 1e-6
    assert abs(np.angle(c) + 0.4) < 1e-6


def test_ls_coefficient_inverts_a_known_gain():
    f = frame(256, C64)
    assert np.isclose(modem.ls_coefficient(f.symbols * (0.5 - 0.2j), f.symbols), 1 / (0.5 - 0.2j))
    assert modem.ls_coefficient(np.zeros((2, 4)), np.ones((2, 4))) == 1


def test_ls_coefficient_unbiased_under_noise():
    ref = frame(1024, C64).symbols
    true = 1 / (0.8 * np.exp(0.3j))
    rng = np.random.default_rng(7)
    est = []
    for _ in range(200):
        noise = 0.05 * (rng.standard_normal(ref.shape) + 1j * rng.standard_normal(ref.shape))
        # rx = ref / true + noise, so E[c] ~ true to first order
        est.append(modem.ls_coefficient(ref / true, ref - true * noise))
    est = np.array(est)
    assert abs(est.mean() - true) < 4 * est.std() / np.sqrt(len(est)) + 1e-12


def qpsk_posterior_oracle(y, var):
    # per dimension: levels +-1/sqrt2, Gray label 0 for -, 1 for +
    a = 1 / np.sqrt(2)
    lp = np.exp(-((y - a) ** 2) / var)
    lm = np.exp(-((y + a) ** 2) / var)
    return lp / (lp + lm)


def test_qpsk_posteriors_match_enumeration():
    f = modem.qam_modulate_uniform(np.zeros(4, np.uint8), C4)
    y = np.array([[0.5 + 0.5j], [0.5 + 0.5j]])
    p1 = modem.bit_posteriors(y, f, 1.0)
    want = qpsk_posterior_oracle(0.5, 1.0)
    np.testing.assert_allclose(p1, np.full((1, 4), want), atol=1e-12)


def shaped_posterior_oracle(y, cb, scale, var):
    """Brute force over all 2**(k+4) composite points: P(level | y) per dimension."""
    pts = np.array([np.array(e) * np.array(s) for e in cb.entries.tolist() for s in itertools.product((1, -1), repeat=4)])
    lv = np.arange(-(2 * cb.alphabet.size - 1), 2 * cb.alphabet.size, 2)
    out = np.zeros((len(y), 4, lv.size))
    for n, yn in enumerate(y):
        lik = np.exp(-np.sum((yn - scale * pts) ** 2, axis=1) / var)
        for d in range(4):
            for j, v in enumerate(lv):
                out[n, d, j] = lik[pts[:, d] == v].sum()
    return out / out.sum(axis=2, keepdims=True)


def test_shaped_posteriors_match_enumeration():
    f = frame(40, C64, CB64, seed=2)
    rng = np.random.default_rng(5)
    var = 0.08
    rx = f.symbols + np.sqrt(var / 2) * (rng.standard_normal(f.symbols.shape) + 1j * rng.standard_normal(f.symbols.shape))
    got = modem.level_posteriors(rx, f, var)
    y = np.stack([rx[0].real, rx[0].imag, rx[1].real, rx[1].imag], axis=1)
    want = shaped_posterior_oracle(y, CB64, f.scale, var)
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.property
@given(st.floats(1e-3, 10), st.integers(0, 1000))
def test_posteriors_are_distributions(var, seed):
    f = frame(8, C64, CB64, seed)
    rx = f.symbols + np.random.default_rng(seed).standard_normal(f.symbols.shape) * np.sqrt(var)
    post = modem.level_posteriors(rx, f, var)
    assert np.all(post >= 0)
    np.testing.assert_allclose(post.sum(axis=2), 1.0, atol=1e-12)
    p1 = modem.bit_posteriors(rx, f, var)
    assert np.all((p1 >= -1e-12) & (p1 <= 1 + 1e-12))


@pytest.mark.property
@pytest.mark.parametrize("cb,const", [(None, C64), (CB64, C64), (CB256, C256)])
def test_vanishing_noise_recovers_labels(cb, const):
    f = frame(200, const, cb)
    p1 = modem.bit_posteriors(f.symbols, f, 1e-6)
    assert np.array_equal(p1 > 0.5, f.coded_labels.astype(bool))
    assert np.all(np.abs(p1 - f.coded_labels) < 1e-6)


def test_midpoint_observation_is_ambiguous():
    f = modem.qam_modulate_uniform(np.zeros(4, np.uint8), C4)
    assert np.allclose(modem.bit_posteriors(np.zeros((2, 1)), f, 0.5), 0.5)


def test_posteriors_reject_bad_variance():
    f = frame(4)
    for var in (0.0, -1.0, np.inf):
        with pytest.raises(ValueError):
            modem.level_posteriors(f.symbols, f, var)


def test_label_entropies():
    h, hb = modem.label_entropies(frame(4, C64))
    assert h == 12 and np.all(hb == 1)
    h, hb = modem.label_entropies(frame(4, C64, CB64))
    assert h == 9
    # sign bits (MSB of each rail) are uniform, the amplitude bits are not
    assert np.allclose(hb[::3], 1.0)
    assert np.all(hb <= 1) and hb.sum() >= h


def test_constellation_dump_rows():
    rows = list(modem.dump_constellation_rows(C64))
    assert len(rows) == 64
    assert rows[0][1] == "000000" and rows[0][4:] == (-7, -7)
    assert np.allclose(rows[0][2:4], -7 / np.sqrt(42))

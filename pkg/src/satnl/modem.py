"""QAM constellations, bit labeling, TX waveform synthesis and the RX front end.

Label layout per dual-polarization (4D) symbol:

* uniform: X-I rail bits, X-Q rail bits, Y-I rail bits, Y-Q rail bits, each
  rail a binary-reflected Gray code (MSB first) over levels ``-(L-1) .. L-1``;
* shaped: the ``k_bits`` DM bits (big-endian codeword index) followed by one
  sign bit per real dimension (0 = positive) in the order X-I, X-Q, Y-I, Y-Q.

Soft demapping always works on the per-rail Gray labels of the transmitted
points (``TxFrame.coded_labels``); for uniform frames these equal the labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nlpr as _nlpr
from .shaping import SphereCodebook, int_to_bits, pas_map
from .signal import (
    FilterSpec,
    Waveform,
    apply_filter_freq,
    compensate_dispersion,
    matched_filter_and_decimate,
    scale_to_power,
    upsample,
)

_CHUNK_ELEMS = 1 << 21  # bounds the (chunk, codebook) work arrays


def gray_code(n_bits: int) -> np.ndarray:
    i = np.arange(1 << n_bits)
    return i ^ (i >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Square M-QAM on the odd-integer grid with per-rail Gray labels."""

    M: int

    def __post_init__(self):
        side = int(round(np.sqrt(self.M)))
        if side * side != self.M or side < 2 or side & (side - 1):
            raise ValueError(f"M={self.M} is not a square power-of-two QAM order")

    @property
    def rail_levels(self) -> np.ndarray:
        side = int(round(np.sqrt(self.M)))
        return np.arange(-(side - 1), side, 2)

    @property
    def bits_per_rail(self) -> int:
        return self.rail_levels.size.bit_length() - 1

    @property
    def bits_per_2d(self) -> int:
        return 2 * self.bits_per_rail

    @property
    def rail_labels(self) -> np.ndarray:
        """(L, bits_per_rail) Gray label of each rail level, ascending levels."""
        return int_to_bits(gray_code(self.bits_per_rail), self.bits_per_rail)

    @property
    def uniform_energy(self) -> float:
        """E|s|^2 per 2D on the integer grid under a uniform distribution."""
        return 2.0 * (self.M - 1) / 3.0

    def points(self, normalized: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """All M points and their labels, index = I position * L + Q position."""
        lv = self.rail_levels
        lab = self.rail_labels
        pts = (lv[:, None] + 1j * lv[None, :]).ravel()
        labels = np.concatenate(
            [np.repeat(lab, lv.size, axis=0), np.tile(lab, (lv.size, 1))], axis=1
        )
        if normalized:
            pts = pts / np.sqrt(self.uniform_energy)
        return pts, labels


@dataclass(frozen=True, eq=False)
class TxFrame:
    """Transmitted symbols (2, n) at unit mean power per 2D, plus their labels."""

    symbols: np.ndarray
    labels: np.ndarray
    constellation: Constellation
    codebook: SphereCodebook | None
    scale: float  # normalized symbol = scale * integer-grid value

    @property
    def shaped(self) -> bool:
        return self.codebook is not None

    @property
    def mode(self) -> str:
        return "shaped" if self.shaped else "uniform"

    @property
    def bits_per_4d(self) -> int:
        return self.labels.shape[1]

    @property
    def coded_labels(self) -> np.ndarray:
        """Per-rail Gray labels of the transmitted points, (n, 4 * bits_per_rail)."""
        lv = self.constellation.rail_levels
        pos = (self.grid_values + lv[-1]) // 2
        return self.constellation.rail_labels[pos].reshape(len(self), -1)

    @property
    def grid_values(self) -> np.ndarray:
        """(n, 4) real integer-grid values in X-I, X-Q, Y-I, Y-Q order."""
        s = self.symbols / self.scale
        return np.rint(np.stack([s[0].real, s[0].imag, s[1].real, s[1].imag], axis=1)).astype(np.int64)

    def __len__(self) -> int:
        return self.symbols.shape[1]


def shaped_energy(cb: SphereCodebook) -> float:
    """E|s|^2 per 2D on the integer grid for PAS with codebook ``cb``."""
    return float(np.mean(cb.energies)) * 2.0 / cb.block_len


def _to_symbols(values: np.ndarray, scale: float) -> np.ndarray:
    v = values * scale
    return np.stack([v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]])


def qam_modulate_uniform(bits, constellation: Constellation) -> TxFrame:
    m = constellation.bits_per_rail
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    per_symbol = 4 * m
    if bits.size == 0 or bits.size % per_symbol:
        raise ValueError(f"bit count {bits.size} is not a positive multiple of {per_symbol}")
    labels = bits.reshape(-1, per_symbol)
    gray_to_pos = np.argsort(gray_code(m))
    weights = 1 << np.arange(m - 1, -1, -1)
    rails = labels.reshape(-1, 4, m) @ weights
    values = constellation.rail_levels[gray_to_pos[rails]]
    scale = 1.0 / np.sqrt(constellation.uniform_energy)
    return TxFrame(_to_symbols(values, scale), labels.copy(), constellation, None, scale)


def pas_modulate(cb: SphereCodebook, bits, constellation: Constellation) -> TxFrame:
    if cb.block_len != 4:
        raise ValueError("one DM block must span one 4D symbol (block_len=4)")
    if tuple(cb.alphabet.levels) != tuple(constellation.rail_levels[constellation.rail_levels > 0]):
        raise ValueError("codebook alphabet does not match the constellation rail")
    frames = pas_map(cb, bits)
    labels = np.concatenate([frames.dm_bits, frames.sign_bits], axis=1).astype(np.uint8)
    scale = 1.0 / np.sqrt(shaped_energy(cb))
    return TxFrame(_to_symbols(frames.values, scale), labels, constellation, cb, scale)


def random_frame(n_symbols: int, constellation: Constellation, cb: SphereCodebook | None, rng) -> TxFrame:
    """Frame of ``n_symbols`` 4D symbols carrying uniform random bits."""
    if cb is None:
        bits = rng.integers(0, 2, size=n_symbols * 4 * constellation.bits_per_rail, dtype=np.uint8)
        return qam_modulate_uniform(bits, constellation)
    bits = rng.integers(0, 2, size=n_symbols * (cb.k_bits + cb.block_len), dtype=np.uint8)
    return pas_modulate(cb, bits, constellation)


def hard_decision_bits(rx_symbols: np.ndarray, frame: TxFrame) -> tuple[np.ndarray, np.ndarray]:
    """Slice to the nearest grid point and recover labels.

    Returns ``(labels, valid)``; ``valid`` is False for shaped symbols whose
    amplitude block is not a codeword (their label rows are zero).
    """
    s = np.asarray(rx_symbols) / frame.scale
    real = np.stack([s[0].real, s[0].imag, s[1].real, s[1].imag], axis=1)
    lv = frame.constellation.rail_levels
    pos = np.clip(np.rint((real + lv[-1]) / 2), 0, lv.size - 1).astype(np.int64)
    if not frame.shaped:
        lab = frame.constellation.rail_labels[pos]
        return lab.reshape(len(pos), -1), np.ones(len(pos), dtype=bool)
    cb = frame.codebook
    values = lv[pos]
    amps = np.abs(values)
    idx = cb.inverse[cb.block_positions(amps)]
    valid = idx >= 0
    dm = int_to_bits(np.where(valid, idx, 0), cb.k_bits)
    signs = (values < 0).astype(np.uint8)
    labels = np.concatenate([dm, signs], axis=1)
    labels[~valid] = 0
    return labels, valid


def tx_waveform(
    frame: TxFrame,
    sps: int,
    rolloff: float,
    symbol_rate: float,
    dac_cutoff: float | None = None,
) -> Waveform:
    """Upsample, RRC-shape and band-limit ``frame``; unit mean power (both pols)."""
    filters = [FilterSpec.rrc(symbol_rate, rolloff)]
    if dac_cutoff is not None:
        filters.append(FilterSpec.brickwall(dac_cutoff))
    w = apply_filter_freq(upsample(frame.symbols, sps, symbol_rate), *filters)
    if not np.any(w.samples):
        return w
    return scale_to_power(w, 1.0)


def ls_coefficient(rx: np.ndarray, ref: np.ndarray) -> complex:
    """Complex c minimizing ||c * rx - ref||^2 over both polarizations."""
    den = np.vdot(rx, rx).real
    if den == 0:
        return 1.0 + 0j
    return complex(np.vdot(rx, ref) / den)


def rx_frontend(
    w: Waveform,
    frame: TxFrame,
    sps: int,
    rolloff: float,
    adc_cutoff: float | None = None,
    accumulated_beta2: float = 0.0,
    rx_nlpr: "_nlpr.NlprSpec | None" = None,
) -> tuple[np.ndarray, complex]:
    """ADC band limit, CD compensation, optional RX NLPR, matched filter, LS scaling.

    ``accumulated_beta2`` is beta2 * length in s^2 (0 disables CD compensation).
    Returns the corrected symbols (2, n) and the applied LS coefficient.
    """
    symbol_rate = w.sample_rate / sps
    if adc_cutoff is not None:
        w = apply_filter_freq(w, FilterSpec.brickwall(adc_cutoff))
    if accumulated_beta2:
        w = compensate_dispersion(w, accumulated_beta2, 1.0)
    if rx_nlpr is not None:
        w = _nlpr.apply_rx_nlpr(w, rx_nlpr)
    y = matched_filter_and_decimate(w, FilterSpec.rrc(symbol_rate, rolloff), sps, 0)
    c = ls_coefficient(y, frame.symbols)
    return c * y, c


def _split_dims(rx: np.ndarray) -> np.ndarray:
    rx = np.asarray(rx)
    return np.stack([rx[0].real, rx[0].imag, rx[1].real, rx[1].imag], axis=1)


def level_posteriors(rx_symbols: np.ndarray, frame: TxFrame, noise_var: float) -> np.ndarray:
    """Posterior over the signed rail levels of each real dimension, (n, 4, L).

    Auxiliary channel ``q(y|s) = exp(-||y - s||^2 / noise_var)`` with
    ``noise_var`` the noise variance per complex (2D) dimension. Shaped frames
    use the exact uniform prior over all ``2**(k+N)`` composite 4D points;
    uniform frames factor per dimension.
    """
    if not noise_var > 0 or not np.isfinite(noise_var):
        raise ValueError(f"noise_var must be positive and finite, got {noise_var}")
    y = _split_dims(rx_symbols)
    if frame.shaped:
        post = _shaped_level_weights(y, frame, noise_var)
    else:
        lv = frame.constellation.rail_levels * frame.scale
        metric = -((y[:, :, None] - lv) ** 2) / noise_var
        metric -= metric.max(axis=2, keepdims=True)
        post = np.exp(metric)
    return post / post.sum(axis=2, keepdims=True)


def _shaped_level_weights(y, frame, noise_var):
    cb = frame.codebook
    levels = np.asarray(cb.alphabet.levels, dtype=float) * frame.scale
    La = levels.size
    lookup = {a: i for i, a in enumerate(cb.alphabet.levels)}
    pos = np.vectorize(lookup.get)(cb.entries)  # (B, 4) level position per dimension
    onehot = np.concatenate([np.eye(La)[pos[:, d]] for d in range(4)], axis=1)  # (B, 4 La)
    out = np.empty((y.shape[0], 4, 2 * La))
    chunk = max(256, _CHUNK_ELEMS // len(cb.entries))
    for start in range(0, y.shape[0], chunk):
        rows = slice(start, start + chunk)
        yc = y[rows]
        lp = -((yc[:, :, None] - levels) ** 2) / noise_var  # (c, 4, La), +a
        lm = -((yc[:, :, None] + levels) ** 2) / noise_var  # -a
        lg = np.logaddexp(lp, lm)
        # log of the sign-summed likelihood of every codebook block
        log_G = lg[:, 0, pos[:, 0]]
        for d in range(1, 4):
            log_G += lg[:, d, pos[:, d]]
        log_G -= log_G.max(axis=1, keepdims=True)
        G = np.exp(log_G, out=log_G)
        # weight of amplitude position l in dimension d, other dimensions summed out
        S = (G @ onehot).reshape(-1, 4, La)
        out[rows, :, :La] = (S * np.exp(lm - lg))[:, :, ::-1]  # rail order: -a_max .. -a_min
        out[rows, :, La:] = S * np.exp(lp - lg)
    return out


def bit_posteriors(rx_symbols: np.ndarray, frame: TxFrame, noise_var: float) -> np.ndarray:
    """P(b_i = 1 | y) for the per-rail Gray label bits, shape (n, 4 * bits_per_rail)."""
    post = level_posteriors(rx_symbols, frame, noise_var)
    p1 = post @ frame.constellation.rail_labels.astype(float)
    return p1.reshape(post.shape[0], -1)


def label_entropies(frame: TxFrame) -> tuple[float, np.ndarray]:
    """Exact H(X) per 4D symbol and H(B_i) of each Gray label bit, in bits."""
    c = frame.constellation
    m = c.bits_per_rail
    if not frame.shaped:
        return 4.0 * m, np.ones(4 * m)
    cb = frame.codebook
    lv = c.rail_levels
    lab = c.rail_labels.astype(float)
    h = []
    for d in range(4):
        p_amp = np.array([np.mean(cb.entries[:, d] == abs(v)) for v in lv]) / 2
        p1 = np.clip(p_amp @ lab, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            hb = -(np.nan_to_num(p1 * np.log2(p1)) + np.nan_to_num((1 - p1) * np.log2(1 - p1)))
        h.append(hb)
    return float(cb.k_bits + cb.block_len), np.concatenate(h)


def dump_constellation_rows(constellation: Constellation):
    """Rows (index, label, I, Q, I_grid, Q_grid) of the normalized constellation."""
    pts, labels = constellation.points(normalized=True)
    grid, _ = constellation.points(normalized=False)
    for i, (p, lab, g) in enumerate(zip(pts, labels, grid)):
        yield i, "".join(map(str, lab)), p.real, p.imag, int(g.real), int(g.imag)

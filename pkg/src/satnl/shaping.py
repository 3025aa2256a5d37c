"""Sphere shaping over short amplitude blocks, realized as a lookup table.

A block of ``N`` amplitudes covers the four real dimensions of one
dual-polarization symbol, ordered (X-I, X-Q, Y-I, Y-Q). The codebook holds the
``2**k_bits`` lowest-energy blocks; probabilistic amplitude shaping (PAS)
adds one uniform sign bit per dimension.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AmplitudeAlphabet:
    levels: tuple[int, ...]

    def __post_init__(self):
        levels = tuple(int(a) for a in self.levels)
        n = len(levels)
        if n == 0 or n & (n - 1):
            raise ValueError(f"alphabet size must be a power of two, got {n}")
        if any(a <= 0 for a in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be positive and strictly increasing")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def for_qam(cls, M: int) -> "AmplitudeAlphabet":
        """Positive PAM amplitudes {1, 3, ...} of one rail of square M-QAM."""
        side = int(round(np.sqrt(M)))
        if side * side != M or side < 2:
            raise ValueError(f"M={M} is not a square QAM order")
        return cls(tuple(range(1, side, 2)))

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def bits_per_amplitude(self) -> int:
        return self.size.bit_length() - 1


@dataclass(frozen=True, eq=False)
class SphereCodebook:
    """Minimum-energy amplitude blocks sorted by (energy, tuple).

    ``entries[i]`` is the block for DM index ``i``. ``inverse`` maps the
    mixed-radix index of any block (digits are level positions, first
    amplitude most significant) to its DM index, or -1.
    """

    alphabet: AmplitudeAlphabet
    block_len: int
    k_bits: int
    entries: np.ndarray
    inverse: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return np.sum(self.entries.astype(np.int64) ** 2, axis=1)

    @property
    def rate_per_2d(self) -> float:
        """Information rate of PAS with this codebook, in bit per 2D."""
        return 2.0 * (self.k_bits + self.block_len) / self.block_len

    def block_positions(self, blocks: np.ndarray) -> np.ndarray:
        """Mixed-radix index of each amplitude block; -1 rows if not on the alphabet."""
        blocks = np.asarray(blocks)
        lookup = np.full(max(self.alphabet.levels) + 1, -1, dtype=np.int64)
        lookup[list(self.alphabet.levels)] = np.arange(self.alphabet.size)
        valid = (blocks >= 0) & (blocks < lookup.size)
        pos = np.where(valid, lookup[np.clip(blocks, 0, lookup.size - 1)], -1)
        radix = self.alphabet.size ** np.arange(self.block_len - 1, -1, -1)
        idx = pos @ radix
        return np.where(np.all(pos >= 0, axis=-1), idx, -1)


def build_codebook(alphabet: AmplitudeAlphabet, N: int, k_bits: int) -> SphereCodebook:
    n_total = alphabet.size**N
    if k_bits < 0 or 2**k_bits > n_total:
        raise ValueError(f"k_bits={k_bits} needs {2**k_bits} blocks, alphabet offers {n_total}")
    # product() yields blocks in lexicographic order, which is also mixed-radix order
    blocks = np.array(list(itertools.product(alphabet.levels, repeat=N)), dtype=np.int64)
    energy = np.sum(blocks**2, axis=1)
    order = np.argsort(energy, kind="stable")
    chosen = order[: 2**k_bits]
    inverse = np.full(n_total, -1, dtype=np.int64)
    inverse[chosen] = np.arange(chosen.size)
    entries = blocks[chosen]
    entries.setflags(write=False)
    inverse.setflags(write=False)
    return SphereCodebook(alphabet, N, k_bits, entries, inverse)


def bits_to_int(bits) -> np.ndarray:
    """Big-endian integer value of the last axis of a 0/1 array."""
    bits = np.asarray(bits, dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def int_to_bits(values, n_bits: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def dm_encode(cb: SphereCodebook, bits) -> tuple[int, ...]:
    bits = np.asarray(bits)
    if bits.shape != (cb.k_bits,):
        raise ValueError(f"expected {cb.k_bits} bits, got shape {bits.shape}")
    return tuple(int(a) for a in cb.entries[int(bits_to_int(bits))])


def dm_decode(cb: SphereCodebook, block) -> np.ndarray | None:
    """DM bits for ``block``, or None when the block is not a codeword."""
    block = np.asarray(block)
    if block.shape != (cb.block_len,):
        raise ValueError(f"expected a block of {cb.block_len} amplitudes, got shape {block.shape}")
    if not set(block.tolist()) <= set(cb.alphabet.levels):
        raise ValueError(f"block {tuple(block)} contains amplitudes outside the alphabet")
    index = cb.inverse[cb.block_positions(block)]
    if index < 0:
        return None
    return int_to_bits(index, cb.k_bits)


def lut_size_bits(cb: SphereCodebook) -> tuple[int, int]:
    """(TX, RX) lookup-table sizes in bits.

    TX stores each codeword's amplitude labels; RX stores ``k_bits`` for every
    possible block.
    """
    tx = 2**cb.k_bits * cb.block_len * cb.alphabet.bits_per_amplitude
    rx = cb.alphabet.size**cb.block_len * cb.k_bits
    return tx, rx


@dataclass(frozen=True, eq=False)
class PasFrame:
    """A run of PAS frames: one row per shaped 4D symbol."""

    dm_bits: np.ndarray  # (n, k_bits)
    sign_bits: np.ndarray  # (n, N)
    amplitudes: np.ndarray  # (n, N)

    @property
    def signs(self) -> np.ndarray:
        return 1 - 2 * self.sign_bits.astype(np.int64)

    @property
    def values(self) -> np.ndarray:
        """Signed PAM values, (n, N)."""
        return self.signs * self.amplitudes

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


def pas_map(cb: SphereCodebook, bitstream) -> PasFrame:
    bits = np.asarray(bitstream, dtype=np.uint8).ravel()
    per_frame = cb.k_bits + cb.block_len
    if bits.size == 0 or bits.size % per_frame:
        raise ValueError(f"bitstream length {bits.size} is not a positive multiple of {per_frame}")
    rows = bits.reshape(-1, per_frame)
    dm_bits = rows[:, : cb.k_bits]
    sign_bits = rows[:, cb.k_bits :]
    amplitudes = cb.entries[bits_to_int(dm_bits)] if cb.k_bits else np.repeat(cb.entries, len(rows), axis=0)
    return PasFrame(dm_bits.copy(), sign_bits.copy(), amplitudes)


def empirical_amplitude_distribution(frames, levels) -> np.ndarray:
    """Relative frequency of each level among the amplitudes in ``frames``.

    ``frames`` is a PasFrame or any array of amplitude blocks.
    """
    amps = frames.amplitudes if isinstance(frames, PasFrame) else np.asarray(frames)
    amps = np.abs(amps).ravel()
    if amps.size == 0:
        raise ValueError("need at least one frame")
    counts = np.array([np.count_nonzero(amps == a) for a in levels], dtype=float)
    return counts / amps.size

"""Dual-polarization waveforms and frequency-domain filtering.

All filtering is circular (periodic) over the whole burst. Samples are in
sqrt(W), so ``|x|**2`` is instantaneous power in watts.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

logger = logging.getLogger(__name__)

_DUMP_MAGIC = b"SATNLWF1"
_DUMP_HEADER = struct.Struct("<8sQdd")  # magic, length, sample_rate, t0 -> 32 bytes


@dataclass(frozen=True, eq=False)
class Waveform:
    """Complex baseband samples for both polarizations.

    ``samples`` has shape ``(2, K)``; row 0 is pol-X, row 1 is pol-Y.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 2 or s.shape[0] != 2:
            raise ValueError(f"samples must have shape (2, K), got {s.shape}")
        if s.shape[1] < 1:
            raise ValueError("waveform must contain at least one sample")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_pols(cls, pol_x, pol_y, sample_rate: float, t0: float = 0.0) -> "Waveform":
        pol_x = np.atleast_1d(np.asarray(pol_x, dtype=complex))
        pol_y = np.atleast_1d(np.asarray(pol_y, dtype=complex))
        if pol_x.shape != pol_y.shape:
            raise ValueError("pol_x and pol_y must have identical lengths")
        return cls(np.stack([pol_x, pol_y]), sample_rate, t0)

    @property
    def pol_x(self) -> np.ndarray:
        return self.samples[0]

    @property
    def pol_y(self) -> np.ndarray:
        return self.samples[1]

    def __len__(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples: np.ndarray, **diagnostics) -> "Waveform":
        """Same grid, new samples; diagnostics are merged."""
        return Waveform(samples, self.sample_rate, self.t0, {**self.diagnostics, **diagnostics})

    def freqs(self) -> np.ndarray:
        return sfft.fftfreq(len(self), d=1.0 / self.sample_rate)

    def energy(self) -> float:
        """Sum of |x|^2 over both polarizations (sample units, not joules)."""
        return float(np.sum(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class FilterSpec:
    """Ideal frequency-domain filter: root-raised-cosine or brickwall low-pass."""

    kind: str
    rolloff: float = 0.0
    cutoff_hz: float = float("inf")
    symbol_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rrc", "brickwall"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.kind == "brickwall" and not self.cutoff_hz > 0:
            raise ValueError(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if self.kind == "rrc" and not self.symbol_rate > 0:
            raise ValueError("rrc filter needs a positive symbol_rate")

    @classmethod
    def rrc(cls, symbol_rate: float, rolloff: float) -> "FilterSpec":
        return cls("rrc", rolloff=rolloff, symbol_rate=symbol_rate)

    @classmethod
    def brickwall(cls, cutoff_hz: float) -> "FilterSpec":
        return cls("brickwall", cutoff_hz=cutoff_hz)

    def response(self, freqs: np.ndarray) -> np.ndarray:
        """Real, even frequency response sampled at ``freqs`` (Hz)."""
        f = np.abs(np.asarray(freqs, dtype=float))
        if self.kind == "brickwall":
            return (f <= self.cutoff_hz).astype(float)
        return rrc_response(f, self.symbol_rate, self.rolloff)


def rrc_response(freqs, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Root-raised-cosine amplitude response with unit passband gain."""
    f = np.abs(np.asarray(freqs, dtype=float))
    f1 = (1.0 - rolloff) * symbol_rate / 2
    f2 = (1.0 + rolloff) * symbol_rate / 2
    h = np.zeros_like(f)
    h[f <= f1] = 1.0
    if rolloff > 0:
        band = (f > f1) & (f <= f2)
        h[band] = np.sqrt(0.5 * (1.0 + np.cos(np.pi / (rolloff * symbol_rate) * (f[band] - f1))))
    return h


def upsample(symbols, sps: int, symbol_rate: float = 1.0) -> Waveform:
    """Insert ``sps - 1`` zeros after every symbol.

    ``symbols`` is a ``(2, n)`` array (or a pair of equal-length sequences).
    """
    if int(sps) != sps or sps < 2:
        raise ValueError(f"sps must be an integer >= 2, got {sps}")
    sps = int(sps)
    sym = np.asarray(symbols, dtype=complex)
    if sym.ndim != 2 or sym.shape[0] != 2 or sym.shape[1] == 0:
        raise ValueError("symbols must be a non-empty (2, n) array")
    out = np.zeros((2, sym.shape[1] * sps), dtype=complex)
    out[:, ::sps] = sym
    return Waveform(out, sps * symbol_rate)


def apply_filter_freq(w: Waveform, *filters: FilterSpec) -> Waveform:
    """Apply one or more filters in a single FFT pass (product of responses).

    Brickwall filters at or above Nyquist are dropped and recorded in
    ``diagnostics['allpass_brickwall']``.
    """
    nyquist = w.sample_rate / 2
    active = []
    flags = {}
    for f in filters:
        if f.kind == "brickwall" and f.cutoff_hz >= nyquist:
            logger.debug("brickwall cutoff %.3g Hz >= Nyquist, treated as all-pass", f.cutoff_hz)
            flags["allpass_brickwall"] = True
            continue
        if f.kind == "rrc" and f.symbol_rate * (1 + f.rolloff) > w.sample_rate:
            raise ValueError(
                f"RRC occupies {f.symbol_rate * (1 + f.rolloff):.4g} Hz two-sided, "
                f"more than the sample rate {w.sample_rate:.4g} Hz"
            )
        active.append(f)
    if not active:
        return w.with_samples(w.samples, **flags)
    freqs = w.freqs()
    h = np.ones(len(w))
    for f in active:
        h = h * f.response(freqs)
    spec = sfft.fft(w.samples, axis=-1) * h
    return w.with_samples(sfft.ifft(spec, axis=-1), **flags)


def matched_filter_and_decimate(w: Waveform, f: FilterSpec, sps: int, phase: int = 0) -> np.ndarray:
    """RRC matched filter, then take every ``sps``-th sample from ``phase``.

    The ``sps`` gain undoes the energy spread of impulse-train upsampling, so
    a back-to-back chain returns the transmitted symbols.
    """
    if f.kind != "rrc":
        raise ValueError("matched filter must be an RRC FilterSpec")
    if not 0 <= phase < sps:
        raise ValueError(f"phase must be in [0, {sps}), got {phase}")
    filtered = apply_filter_freq(w, f)
    return sps * filtered.samples[:, phase::sps]


def instantaneous_power(w: Waveform) -> np.ndarray:
    """Per-sample power in W, summed over both polarizations."""
    s = w.samples
    return s[0].real ** 2 + s[0].imag ** 2 + s[1].real ** 2 + s[1].imag ** 2


def mean_power(w: Waveform) -> float:
    return float(np.mean(instantaneous_power(w)))


def scale_to_power(w: Waveform, target: float) -> Waveform:
    if not target > 0:
        raise ValueError(f"target power must be positive, got {target}")
    p = mean_power(w)
    if not p > 0:
        raise ValueError("cannot scale a zero-power waveform")
    return w.with_samples(w.samples * np.sqrt(target / p))


def out_of_band_fraction(w: Waveform, band_hz: float) -> float:
    """Fraction of total energy at |f| > band_hz."""
    spec = np.abs(sfft.fft(w.samples, axis=-1)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    outside = np.abs(w.freqs()) > band_hz
    return float(spec[:, outside].sum() / total)


def dispersion_operator(freqs: np.ndarray, beta2: float, length: float) -> np.ndarray:
    """Frequency response of pure group-velocity dispersion over ``length``.

    ``beta2`` in s^2/m, ``length`` in m. Sign convention matches
    ``dE/dz = -j (beta2/2) d^2E/dt^2`` with numpy's FFT.
    """
    omega = 2 * np.pi * freqs
    return np.exp(0.5j * beta2 * omega**2 * length)


def compensate_dispersion(w: Waveform, beta2: float, length: float) -> Waveform:
    """Exact inverse of accumulated dispersion ``beta2 * length``."""
    if beta2 * length == 0:
        return w
    h = dispersion_operator(w.freqs(), beta2, -length)
    return w.with_samples(sfft.ifft(sfft.fft(w.samples, axis=-1) * h, axis=-1))


def dump_waveform(w: Waveform, path) -> None:
    """Write the debug binary dump: 32-byte header, then x then y as re/im float64 LE."""
    header = _DUMP_HEADER.pack(_DUMP_MAGIC, len(w), float(w.sample_rate), float(w.t0))
    body = np.ascontiguousarray(w.samples).astype("<c16").tobytes()
    Path(path).write_bytes(header + body)


def load_waveform(path) -> Waveform:
    raw = Path(path).read_bytes()
    magic, n, fs, t0 = _DUMP_HEADER.unpack_from(raw)
    if magic != _DUMP_MAGIC:
        raise ValueError(f"{path}: not a waveform dump")
    data = np.frombuffer(raw, dtype="<c16", offset=_DUMP_HEADER.size)
    if data.size != 2 * n:
        raise ValueError(f"{path}: expected {2 * n} samples, found {data.size}")
    return Waveform(data.reshape(2, n).copy(), fs, t0)

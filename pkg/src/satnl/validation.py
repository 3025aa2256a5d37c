"""Analytic self-checks run by ``satnl validate``."""

from __future__ import annotations

import itertools
from typing import Callable, NamedTuple

import numpy as np

from .channel import FiberSpec, LinkNoise, snr_linear, ssfm_propagate
from .modem import Constellation
from .shaping import AmplitudeAlphabet, build_codebook, lut_size_bits
from .signal import Waveform


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def rms_width(t: np.ndarray, intensity: np.ndarray) -> float:
    p = intensity / intensity.sum()
    mu = np.sum(t * p)
    return float(np.sqrt(np.sum((t - mu) ** 2 * p)))


def gaussian_pulse(n: int = 4096, dt: float = 10e-15, t0: float = 1e-12, peak_w: float = 1.0):
    t = (np.arange(n) - n // 2) * dt
    a = np.sqrt(peak_w / 2) * np.exp(-(t**2) / (2 * t0**2))
    return t, Waveform.from_pols(a, a, 1.0 / dt)


def check_lut_sizes() -> Check:
    got = [
        lut_size_bits(build_codebook(AmplitudeAlphabet.for_qam(M), 4, k))
        for M, k in ((64, 5), (256, 9))
    ]
    want = [(256, 1280), (6144, 36864)]
    return Check("lut sizes", got == want, f"got {got}, want {want}")


def check_codebook_enumeration() -> Check:
    ok = True
    for M, k in ((64, 5), (256, 9)):
        levels = AmplitudeAlphabet.for_qam(M).levels
        brute = sorted(itertools.product(levels, repeat=4), key=lambda b: (sum(a * a for a in b), b))
        cb = build_codebook(AmplitudeAlphabet(levels), 4, k)
        ok &= [tuple(e) for e in cb.entries.tolist()] == brute[: 2**k]
    return Check("codebook = enumeration", ok, "64QAM k=5, 256QAM k=9")


def check_spm_phase() -> Check:
    p, length = 10.0, 30.0
    fiber = FiberSpec(length, 0.0, 3.6, 0.0)
    a = np.full(64, np.sqrt(p / 2), dtype=complex)
    out = ssfm_propagate(Waveform.from_pols(a, a, 1e12), fiber, None, 50)
    expected = 8 / 9 * fiber.gamma * p * length
    err = float(np.max(np.abs(np.angle(out.samples) - expected)))
    amp = float(np.max(np.abs(np.abs(out.samples) - np.abs(a))))
    return Check("SPM phase", err < 1e-6 and amp < 1e-9, f"phase error {err:.2e} rad")


def check_dispersion_broadening() -> Check:
    t, w = gaussian_pulse()
    fiber = FiberSpec(100.0, 0.0, 0.0, 17.0)
    out = ssfm_propagate(w, fiber)
    t0 = 1e-12
    ld = t0**2 / abs(fiber.beta2)
    want = np.sqrt(1 + (fiber.length / ld) ** 2)
    got = rms_width(t, np.abs(out.pol_x) ** 2) / rms_width(t, np.abs(w.pol_x) ** 2)
    rel = abs(got / want - 1)
    return Check("dispersive broadening", rel < 5e-3, f"relative error {rel:.2e}")


def check_energy_conservation() -> Check:
    _, w = gaussian_pulse(peak_w=50.0)
    out = ssfm_propagate(w, FiberSpec(100.0, 0.0, 3.6, 17.0), None, 100)
    rel = abs(out.energy() / w.energy() - 1)
    return Check("lossless energy", rel < 1e-10, f"relative change {rel:.2e}")


def check_gray() -> Check:
    ok = True
    for M in (64, 256):
        lab = Constellation(M).rail_labels
        ok &= bool(np.all(np.sum(lab[1:] != lab[:-1], axis=1) == 1))
        ok &= len({tuple(r) for r in Constellation(M).points()[1].tolist()}) == M
    return Check("gray labeling", ok, "64QAM, 256QAM")


def check_snr_formula() -> Check:
    snr = snr_linear(40.0, LinkNoise(60.0, 4.0, 100e9))
    db = 10 * np.log10(snr)
    return Check("link SNR", abs(db - 24.93) < 0.01, f"{db:.3f} dB at 40 dBm / 60 dB loss")


CHECKS: tuple[Callable[[], Check], ...] = (
    check_lut_sizes,
    check_codebook_enumeration,
    check_spm_phase,
    check_dispersion_broadening,
    check_energy_conservation,
    check_gray,
    check_snr_formula,
)


def run_all() -> list[Check]:
    return [c() for c in CHECKS]

"""HPOA and pigtail propagation (split-step Fourier), free-space loss and ASE noise.

Propagation solves

    dE/dz = (g(z) - alpha)/2 E - j beta2/2 d^2E/dt^2 + j c_nl gamma (|Ex|^2 + |Ey|^2) E

for both polarizations, with ``c_nl = 8/9`` (Manakov) by default. Inside the
HPOA the net gain ``g - alpha`` is implied by a :class:`PowerProfile`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import constants
from scipy import fft as sfft

from .signal import Waveform, dispersion_operator, mean_power, scale_to_power

logger = logging.getLogger(__name__)

MANAKOV = 8.0 / 9.0


class PropagationError(RuntimeError):
    pass


def dbm_to_w(p_dbm):
    return 1e-3 * 10 ** (np.asarray(p_dbm, dtype=float) / 10)


def w_to_dbm(p_w):
    return 10 * np.log10(np.asarray(p_w, dtype=float) / 1e-3)


@dataclass(frozen=True)
class FiberSpec:
    length: float  # m
    alpha_db_per_km: float = 0.2
    gamma_per_w_km: float = 3.6
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"fiber length must be positive, got {self.length}")
        if self.gamma_per_w_km < 0 or self.alpha_db_per_km < 0:
            raise ValueError("gamma and alpha must be non-negative")

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/m."""
        return self.alpha_db_per_km * np.log(10) / 10 / 1e3

    @property
    def gamma(self) -> float:
        """Nonlinear coefficient in 1/(W m)."""
        return self.gamma_per_w_km / 1e3

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in s^2/m."""
        lam = self.wavelength_nm * 1e-9
        return -self.dispersion_ps_nm_km * 1e-6 * lam**2 / (2 * np.pi * constants.c)

    def passive_effective_length(self) -> float:
        if self.alpha == 0:
            return self.length
        return -np.expm1(-self.alpha * self.length) / self.alpha


@dataclass(frozen=True)
class PowerProfile:
    """Power along the HPOA, linear in dB between breakpoints ``(z_m, power_dbm)``."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bp = tuple((float(z), float(p)) for z, p in self.breakpoints)
        if len(bp) < 2:
            raise ValueError("a power profile needs at least two breakpoints")
        z = np.array([b[0] for b in bp])
        if z[0] != 0 or np.any(np.diff(z) <= 0):
            raise ValueError("breakpoint positions must start at 0 and strictly increase")
        if not np.all(np.isfinite([b[1] for b in bp])):
            raise ValueError("breakpoint powers must be finite")
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def exponential(cls, length: float, gain_db: float, output_dbm: float) -> "PowerProfile":
        return cls(((0.0, output_dbm - gain_db), (length, output_dbm)))

    @property
    def length(self) -> float:
        return self.breakpoints[-1][0]

    @property
    def input_dbm(self) -> float:
        return self.breakpoints[0][1]

    @property
    def output_dbm(self) -> float:
        return self.breakpoints[-1][1]

    def anchored(self, output_dbm: float) -> "PowerProfile":
        """Same shape shifted so the last breakpoint sits at ``output_dbm``."""
        shift = output_dbm - self.output_dbm
        return PowerProfile(tuple((z, p + shift) for z, p in self.breakpoints))

    def power_w(self, z) -> np.ndarray:
        zs, ps = np.array(self.breakpoints).T
        return dbm_to_w(np.interp(z, zs, ps))

    def integral(self, za: float, zb: float) -> float:
        """Exact integral of P(z) in W*m over [za, zb]."""
        zs = np.array([b[0] for b in self.breakpoints])
        edges = np.concatenate([[za], zs[(zs > za) & (zs < zb)], [zb]])
        p = self.power_w(edges)
        total = 0.0
        for dz, p1, p2 in zip(np.diff(edges), p[:-1], p[1:]):
            r = p2 / p1
            total += dz * p1 if abs(r - 1) < 1e-12 else dz * (p2 - p1) / np.log(r)
        return total


@dataclass(frozen=True)
class LinkNoise:
    loss_db: float
    noise_figure_db: float = 4.0
    symbol_rate: float = 100e9
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.loss_db < 0 or self.noise_figure_db < 0:
            raise ValueError("loss_db and noise_figure_db must be non-negative")

    @property
    def photon_energy(self) -> float:
        return constants.h * constants.c / (self.wavelength_nm * 1e-9)


class _PassiveProfile:
    """P(z)/P(0) = exp(-alpha z) for a fiber without gain."""

    def __init__(self, fiber: FiberSpec):
        self.alpha = fiber.alpha
        self.length = fiber.length

    def rel(self, z):
        return np.exp(-self.alpha * np.asarray(z, dtype=float))

    def rel_integral(self, za, zb):
        if self.alpha == 0:
            return zb - za
        return (np.exp(-self.alpha * za) - np.exp(-self.alpha * zb)) / self.alpha


class _ActiveProfile:
    def __init__(self, profile: PowerProfile):
        self.profile = profile
        self.p0 = float(profile.power_w(0.0))
        self.length = profile.length

    def rel(self, z):
        return self.profile.power_w(z) / self.p0

    def rel_integral(self, za, zb):
        return self.profile.integral(za, zb) / self.p0


def ssfm_propagate(
    w: Waveform,
    fiber: FiberSpec,
    profile: PowerProfile | None = None,
    n_steps: int = 200,
    nl_factor: float = MANAKOV,
) -> Waveform:
    """Symmetric split-step propagation through ``fiber``.

    Without ``profile`` the fiber is passive (loss ``alpha`` only). With one,
    the power evolution follows the profile shape relative to the input power.
    The nonlinear step integrates the power variation inside each step
    exactly, so dispersion-free propagation is exact at any step count.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if profile is not None and not np.isclose(profile.length, fiber.length, rtol=1e-9):
        raise ValueError(f"profile length {profile.length} m != fiber length {fiber.length} m")
    shape = _PassiveProfile(fiber) if profile is None else _ActiveProfile(profile)
    length = fiber.length
    gamma = nl_factor * fiber.gamma
    freqs = w.freqs()

    if gamma == 0:
        h = dispersion_operator(freqs, fiber.beta2, length) * np.sqrt(shape.rel(length))
        out = sfft.ifft(sfft.fft(w.samples, axis=-1) * h, axis=-1)
        return _checked(w, out, steps=0)

    z = np.linspace(0.0, length, n_steps + 1)
    dz = length / n_steps
    half = dispersion_operator(freqs, fiber.beta2, dz / 2)
    rel = shape.rel(z)
    rel_mid = shape.rel(0.5 * (z[:-1] + z[1:]))

    field_f = sfft.fft(w.samples, axis=-1)
    for i in range(n_steps):
        field_f *= half * np.sqrt(rel_mid[i] / rel[i])
        field = sfft.ifft(field_f, axis=-1, overwrite_x=True)
        power = field.real**2 + field.imag**2
        phi = gamma * (power[0] + power[1]) * (shape.rel_integral(z[i], z[i + 1]) / rel_mid[i])
        field *= np.exp(1j * phi)
        field_f = sfft.fft(field, axis=-1, overwrite_x=True)
        field_f *= half * np.sqrt(rel[i + 1] / rel_mid[i])
    return _checked(w, sfft.ifft(field_f, axis=-1), steps=n_steps)


def _checked(w: Waveform, out: np.ndarray, steps: int) -> Waveform:
    if not np.all(np.isfinite(out)):
        raise PropagationError(
            f"non-finite field after propagation (input mean power {mean_power(w):.3g} W)"
        )
    steps += w.diagnostics.get("ssfm_steps", 0)
    return w.with_samples(out, ssfm_steps=steps)


def hpoa_transmit(
    w: Waveform,
    hpoa: FiberSpec,
    profile: PowerProfile,
    pigtail: FiberSpec,
    launch_power_dbm: float,
    steps_hpoa: int = 200,
    steps_pigtail: int = 20,
    nl_factor: float = MANAKOV,
) -> Waveform:
    """Amplify ``w`` through the HPOA doped fiber, then the passive pigtail.

    The input is rescaled to the profile's start power; the profile must end
    at ``launch_power_dbm``.
    """
    if not np.isclose(profile.output_dbm, launch_power_dbm, atol=1e-9):
        raise ValueError(
            f"profile ends at {profile.output_dbm} dBm, launch power is {launch_power_dbm} dBm"
        )
    w = scale_to_power(w, float(dbm_to_w(profile.input_dbm)))
    w = ssfm_propagate(w, hpoa, profile, steps_hpoa, nl_factor)
    return ssfm_propagate(w, pigtail, None, steps_pigtail, nl_factor)


def effective_length(profile: PowerProfile, pigtail: FiberSpec | None = None) -> float:
    """Integral of P(z) over HPOA and pigtail, divided by the HPOA output power (m)."""
    l_eff = profile.integral(0.0, profile.length) / float(dbm_to_w(profile.output_dbm))
    if pigtail is not None:
        l_eff += pigtail.passive_effective_length()
    return l_eff


def snr_linear(launch_power_dbm: float, link: LinkNoise) -> float:
    """P / (R L h nu NF) with L and NF as linear factors."""
    p = float(dbm_to_w(launch_power_dbm))
    loss = 10 ** (link.loss_db / 10)
    nf = 10 ** (link.noise_figure_db / 10)
    return p / (link.symbol_rate * loss * link.photon_energy * nf)


def complex_normal(shape, seed) -> np.ndarray:
    """Circular complex Gaussian draws with E|z|^2 = 1."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def receiver_noise(
    symbols: np.ndarray,
    launch_power_dbm: float,
    link: LinkNoise,
    seed=None,
    draws: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Add ASE noise to unit-power-per-2D symbols at the analytic SNR.

    Noise variance per complex symbol per polarization is ``1/SNR``. Pass
    ``draws`` (unit complex normals) to reuse the same noise realization.
    """
    symbols = np.asarray(symbols)
    snr = snr_linear(launch_power_dbm, link)
    if snr > 1e6:
        logger.warning("SNR of %.1f dB is implausibly high", 10 * np.log10(snr))
    if draws is None:
        draws = complex_normal(symbols.shape, seed)
    return symbols + draws / np.sqrt(snr), snr


def nonlinear_phase_coefficient(hpoa: FiberSpec, profile: PowerProfile, pigtail: FiberSpec) -> float:
    """gamma-weighted effective length: sum of gamma_i * L_eff,i over fiber sections, in 1/W."""
    hpoa_part = hpoa.gamma * effective_length(profile)
    return hpoa_part + pigtail.gamma * pigtail.passive_effective_length()

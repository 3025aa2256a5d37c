"""Nonlinear phase rotation (NLPR), split between transmitter and receiver.

The Kerr phase picked up in a short, high-power fiber is modeled as memoryless
and proportional to instantaneous power. The transmitter removes a fraction
``kappa`` of it, the receiver the remaining ``1 - kappa``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import Waveform, instantaneous_power


@dataclass(frozen=True)
class NlprSpec:
    """kappa split, effective gamma (1/(W m)), effective length (m), launch power (dBm)."""

    kappa: float
    gamma_eff: float
    l_eff: float
    reference_power_dbm: float

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if self.gamma_eff * self.l_eff < 0:
            raise ValueError("gamma_eff * l_eff must be non-negative")

    @property
    def reference_power_w(self) -> float:
        return 1e-3 * 10 ** (self.reference_power_dbm / 10)

    @property
    def peak_phase_per_unit_power(self) -> float:
        """Phase in rad for a sample at the mean power."""
        return self.gamma_eff * self.l_eff * self.reference_power_w


def theta(w: Waveform, spec: NlprSpec) -> np.ndarray:
    """Nonlinear phase per sample: gamma_eff * l_eff * P_launch * p_k.

    ``p_k`` is the instantaneous power normalized to the waveform's own mean,
    so the absolute scale of ``w`` does not matter.
    """
    p = instantaneous_power(w)
    mean = p.mean()
    if mean == 0:
        return np.zeros_like(p)
    return spec.peak_phase_per_unit_power * (p / mean)


def rotate(w: Waveform, phase: np.ndarray) -> Waveform:
    """Multiply both polarizations by exp(j * phase)."""
    return w.with_samples(w.samples * np.exp(1j * phase))


def apply_tx_nlpr(w: Waveform, spec: NlprSpec, phase: np.ndarray | None = None) -> Waveform:
    """Pre-rotate by -kappa * theta. ``phase`` overrides theta computed from ``w``."""
    if spec.kappa == 0:
        return w
    th = theta(w, spec) if phase is None else phase
    return rotate(w, -spec.kappa * th)


def apply_rx_nlpr(w: Waveform, spec: NlprSpec, phase: np.ndarray | None = None) -> Waveform:
    """Post-rotate by (kappa - 1) * theta, theta taken from the received waveform."""
    if spec.kappa == 1:
        return w
    th = theta(w, spec) if phase is None else phase
    return rotate(w, (spec.kappa - 1.0) * th)

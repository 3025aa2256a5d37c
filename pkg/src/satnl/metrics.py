"""GMI under bit-metric decoding, end-to-end simulation points and link-loss search."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channel, modem, nlpr
from .config import LinkConfig
from .shaping import AmplitudeAlphabet, build_codebook
from .signal import FilterSpec, apply_filter_freq, out_of_band_fraction

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12
LOSS_RANGE_DB = (0.0, 100.0)


def estimate_noise_variance(rx_symbols, tx_symbols) -> float:
    """Mean squared Euclidean distance per 4D symbol (sum over both polarizations)."""
    rx = np.asarray(rx_symbols)
    tx = np.asarray(tx_symbols)
    if rx.shape != tx.shape:
        raise ValueError(f"shape mismatch {rx.shape} vs {tx.shape}")
    if rx.size == 0:
        raise ValueError("cannot estimate noise variance from zero symbols")
    err = rx - tx
    var = float(np.mean(np.sum(err.real**2 + err.imag**2, axis=0)))
    if var == 0:
        logger.debug("zero noise variance; GMI uses the floor %g", NOISE_FLOOR)
    return var


def gmi_per_2d(rx_symbols, frame: modem.TxFrame, noise_var_4d: float) -> float:
    """Bit-metric GMI in bit/2D with a Gaussian auxiliary channel.

    ``noise_var_4d`` is the noise power per 4D symbol. The rate is
    ``H(X) - sum_i H(B_i|Y)`` over the Gray label bits, each conditional
    entropy estimate capped at ``H(B_i)`` and the total clipped at 0. For
    uniform QAM this is ``sum_i [1 - E(-log2 P(b_i|y))]^+``.
    """
    rx = np.asarray(rx_symbols)
    if rx.shape != frame.symbols.shape:
        raise ValueError("received symbols do not match the frame")
    var_2d = max(noise_var_4d, NOISE_FLOOR) / 2
    p1 = modem.bit_posteriors(rx, frame, var_2d)
    own = np.where(frame.coded_labels == 1, p1, 1.0 - p1)
    cond = -np.log2(np.maximum(own, np.finfo(float).tiny)).mean(axis=0)
    h_x, h_b = modem.label_entropies(frame)
    cond = np.minimum(cond, h_b)
    return float(max(0.0, h_x - cond.sum()) / 2)


@dataclass
class SimResult:
    mode: str
    launch_power_dbm: float
    loss_db: float
    snr_db_analytic: float
    snr_db_empirical: float
    gmi_bits_per_2d: float
    M: int
    shaped: bool
    kappa: float  # nan when NLPR is off
    bandwidth_hz: float
    n_symbols: int
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = asdict(self)
        diag = row.pop("diagnostics")
        row.update({f"diag_{k}": v for k, v in sorted(diag.items())})
        return row


@dataclass
class Propagated:
    """Noise-free outcome of one (config, power, seed): everything before ASE."""

    cfg: LinkConfig
    launch_power_dbm: float
    seed: int
    frame: modem.TxFrame
    clean: np.ndarray  # RX symbols after LS correction, (2, n)
    diagnostics: dict

    def trimmed(self):
        g = self.cfg.sim.guard
        sl = slice(g, len(self.frame) - g)
        frame = modem.TxFrame(
            self.frame.symbols[:, sl], self.frame.labels[sl], self.frame.constellation,
            self.frame.codebook, self.frame.scale,
        )
        return frame, self.clean[:, sl]


def make_codebook(cfg: LinkConfig):
    m = cfg.modulation
    if not m.shaped:
        return None
    return build_codebook(AmplitudeAlphabet.for_qam(m.M), m.block_len, m.k_bits)


def nlpr_spec(cfg: LinkConfig, launch_power_dbm: float) -> nlpr.NlprSpec:
    """NLPR coefficients matched to the channel (same gamma, profile and 8/9 factor)."""
    hpoa, pig = cfg.fiber_spec("hpoa"), cfg.fiber_spec("pigtail")
    profile = cfg.power_profile(launch_power_dbm)
    gamma_eff = cfg.nlpr.gamma_eff
    l_eff = cfg.nlpr.l_eff
    if gamma_eff is None:
        gamma_eff = cfg.sim.nl_factor * hpoa.gamma
    if l_eff is None:
        if hpoa.gamma > 0:
            l_eff = channel.nonlinear_phase_coefficient(hpoa, profile, pig) / hpoa.gamma
        else:
            l_eff = channel.effective_length(profile, pig)
    return nlpr.NlprSpec(cfg.nlpr.kappa, gamma_eff, l_eff, launch_power_dbm)


def _streams(seed: int):
    data = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return data, np.random.SeedSequence([seed, 1])


def propagate(cfg: LinkConfig, launch_power_dbm: float, seed: int) -> Propagated:
    """TX -> optional TX NLPR -> DAC -> HPOA + pigtail -> RX front end (no noise)."""
    data_rng, _ = _streams(seed)
    const = modem.Constellation(cfg.modulation.M)
    frame = modem.random_frame(cfg.sim.n_symbols, const, make_codebook(cfg), data_rng)
    tx = cfg.tx
    w = modem.tx_waveform(frame, tx.sps, tx.rolloff, tx.symbol_rate, None)
    band = tx.symbol_rate * (1 + tx.rolloff) / 2
    spec = nlpr_spec(cfg, launch_power_dbm) if cfg.nlpr.enabled else None
    if spec is not None:
        w = nlpr.apply_tx_nlpr(w, spec)
    diag = {"oob_tx_nlpr": out_of_band_fraction(w, band)}
    if cfg.dac_cutoff is not None:
        w = apply_filter_freq(w, FilterSpec.brickwall(cfg.dac_cutoff))

    hpoa, pig = cfg.fiber_spec("hpoa"), cfg.fiber_spec("pigtail")
    w = channel.hpoa_transmit(
        w, hpoa, cfg.power_profile(launch_power_dbm), pig, launch_power_dbm,
        cfg.sim.ssfm_steps_hpoa, cfg.sim.ssfm_steps_pigtail, cfg.sim.nl_factor,
    )
    diag["oob_launch"] = out_of_band_fraction(w, band)
    diag["ssfm_steps"] = w.diagnostics.get("ssfm_steps", 0)

    acc_beta2 = hpoa.beta2 * hpoa.length + pig.beta2 * pig.length if cfg.rx.cd_compensation else 0.0
    rx_spec = spec if spec is not None and spec.kappa < 1 else None
    clean, _ = modem.rx_frontend(w, frame, tx.sps, tx.rolloff, cfg.adc_cutoff, acc_beta2, rx_spec)
    return Propagated(cfg, launch_power_dbm, seed, frame, clean, diag)


def _link(cfg: LinkConfig, loss_db: float) -> channel.LinkNoise:
    return channel.LinkNoise(loss_db, cfg.noise.noise_figure_db, cfg.tx.symbol_rate, cfg.noise.wavelength_nm)


class _Evaluator:
    """GMI versus loss on fixed noise draws (common random numbers)."""

    def __init__(self, prop: Propagated):
        self.prop = prop
        self.frame, self.clean = prop.trimmed()
        _, noise_ss = _streams(prop.seed)
        g = prop.cfg.sim.guard
        draws = channel.complex_normal(prop.frame.symbols.shape, noise_ss)
        self.draws = draws[:, g : len(prop.frame) - g]

    def __call__(self, loss_db: float) -> tuple[float, float, float]:
        """Returns (gmi, snr_analytic, noise_var_4d)."""
        snr = channel.snr_linear(self.prop.launch_power_dbm, _link(self.prop.cfg, loss_db))
        rx = self.clean + self.draws / np.sqrt(snr)
        var = estimate_noise_variance(rx, self.frame.symbols)
        return gmi_per_2d(rx, self.frame, var), snr, var


def _result(prop: Propagated, mode: str, loss_db: float, gmi: float, snr: float, var: float) -> SimResult:
    cfg = prop.cfg
    return SimResult(
        mode=mode,
        launch_power_dbm=prop.launch_power_dbm,
        loss_db=loss_db,
        snr_db_analytic=10 * math.log10(snr),
        snr_db_empirical=10 * math.log10(2.0 / max(var, NOISE_FLOOR)),
        gmi_bits_per_2d=gmi,
        M=cfg.modulation.M,
        shaped=cfg.modulation.shaped,
        kappa=cfg.nlpr.kappa if cfg.nlpr.enabled else math.nan,
        bandwidth_hz=cfg.tx.bandwidth_hz,
        n_symbols=cfg.sim.n_symbols,
        seed=prop.seed,
        diagnostics=dict(prop.diagnostics),
    )


def run_point(cfg: LinkConfig, launch_power_dbm: float, loss_db: float, seed: int, mode: str = "custom") -> SimResult:
    prop = propagate(cfg, launch_power_dbm, seed)
    gmi, snr, var = _Evaluator(prop)(loss_db)
    return _result(prop, mode, loss_db, gmi, snr, var)


@dataclass
class LossSearch:
    loss_db: float | None  # None: infeasible
    gmi_at_solution: float
    n_evaluations: int

    @property
    def feasible(self) -> bool:
        return self.loss_db is not None


def acceptable_loss(
    cfg: LinkConfig,
    launch_power_dbm: float,
    target_gmi_per_2d: float,
    tol_db: float = 0.1,
    seed: int = 0,
    prop: Propagated | None = None,
) -> LossSearch:
    """Largest free-space loss with GMI >= target, by bisection on [0, 100] dB.

    The channel is propagated once; every bisection step reuses the same
    noise draws, so GMI(loss) is evaluated on paired samples.
    """
    if not target_gmi_per_2d > 0:
        raise ValueError("target GMI must be positive")
    if prop is None:
        prop = propagate(cfg, launch_power_dbm, seed)
    if target_gmi_per_2d >= prop.cfg.max_rate_per_2d:
        return LossSearch(None, math.nan, 0)
    ev = _Evaluator(prop)
    lo, hi = LOSS_RANGE_DB
    g_lo = ev(lo)[0]
    n = 1
    if g_lo < target_gmi_per_2d:
        return LossSearch(None, g_lo, n)
    g_hi = ev(hi)[0]
    n += 1
    if g_hi >= target_gmi_per_2d:
        return LossSearch(hi, g_hi, n)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        g = ev(mid)[0]
        n += 1
        if g >= target_gmi_per_2d:
            lo, g_lo = mid, g
        else:
            hi = mid
    return LossSearch(lo, g_lo, n)


def cell_seed(base_seed: int, launch_power_dbm: float) -> int:
    """Seed shared by every mode at one launch power (paired comparisons)."""
    ss = np.random.SeedSequence([int(base_seed), int(round(launch_power_dbm * 1000)) & 0xFFFFFFFF])
    return int(ss.generate_state(1, np.uint32)[0])

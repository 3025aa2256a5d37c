"""Run configuration: nested dataclasses loaded from a TOML file."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from .channel import MANAKOV, FiberSpec, PowerProfile


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModulationConfig:
    M: int = 256
    shaped: bool = True
    k_bits: int = 9
    block_len: int = 4


@dataclass(frozen=True)
class TxConfig:
    symbol_rate: float = 100e9
    rolloff: float = 0.05
    sps: int = 8
    bandwidth_hz: float = 110e9  # inf disables the DAC limit
    bandwidth_convention: str = "two-sided"


@dataclass(frozen=True)
class FiberConfig:
    length_m: float = 30.0
    alpha_db_per_km: float = 0.2
    gamma_per_w_km: float = 3.6
    dispersion_ps_nm_km: float = 17.0


@dataclass(frozen=True)
class HpoaConfig:
    fiber: FiberConfig = field(default_factory=FiberConfig)
    gain_db: float = 30.0
    # optional (z_m, relative dB) shape; shifted so the last point is the launch power
    profile: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class NlprConfig:
    enabled: bool = False
    kappa: float = 0.6
    gamma_eff: float | None = None  # 1/(W m), overrides the fiber-derived value
    l_eff: float | None = None  # m


@dataclass(frozen=True)
class RxConfig:
    bandwidth_hz: float = 110e9
    bandwidth_convention: str = "two-sided"
    cd_compensation: bool = True


@dataclass(frozen=True)
class NoiseConfig:
    noise_figure_db: float = 4.0
    wavelength_nm: float = 1550.0


@dataclass(frozen=True)
class SimConfig:
    n_symbols: int = 1 << 16
    guard: int = 256
    ssfm_steps_hpoa: int = 200
    ssfm_steps_pigtail: int = 20
    base_seed: int = 2025
    nl_factor: float = MANAKOV


@dataclass(frozen=True)
class LinkConfig:
    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    tx: TxConfig = field(default_factory=TxConfig)
    hpoa: HpoaConfig = field(default_factory=HpoaConfig)
    pigtail: FiberConfig = field(default_factory=lambda: FiberConfig(length_m=3.0))
    nlpr: NlprConfig = field(default_factory=NlprConfig)
    rx: RxConfig = field(default_factory=RxConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        validate(self)

    def fiber_spec(self, which: str = "hpoa") -> FiberSpec:
        f = self.hpoa.fiber if which == "hpoa" else self.pigtail
        return FiberSpec(
            f.length_m, f.alpha_db_per_km, f.gamma_per_w_km, f.dispersion_ps_nm_km,
            self.noise.wavelength_nm,
        )

    def power_profile(self, launch_power_dbm: float) -> PowerProfile:
        length = self.hpoa.fiber.length_m
        if self.hpoa.profile is None:
            return PowerProfile.exponential(length, self.hpoa.gain_db, launch_power_dbm)
        return PowerProfile(self.hpoa.profile).anchored(launch_power_dbm)

    @property
    def dac_cutoff(self) -> float | None:
        return _cutoff(self.tx.bandwidth_hz, self.tx.bandwidth_convention)

    @property
    def adc_cutoff(self) -> float | None:
        return _cutoff(self.rx.bandwidth_hz, self.rx.bandwidth_convention)

    @property
    def max_rate_per_2d(self) -> float:
        m = self.modulation
        if m.shaped:
            return 2.0 * (m.k_bits + m.block_len) / m.block_len
        return math.log2(m.M)


def _cutoff(bandwidth: float, convention: str) -> float | None:
    if math.isinf(bandwidth):
        return None
    return bandwidth / 2 if convention == "two-sided" else bandwidth


def validate(cfg: LinkConfig) -> None:
    m = cfg.modulation
    side = math.isqrt(m.M)
    if side * side != m.M or side & (side - 1) or side < 2:
        raise ConfigError(f"modulation.M: {m.M} is not a square power-of-two QAM order")
    if m.shaped:
        if m.block_len != 4:
            raise ConfigError("modulation.block_len: one DM block must span one 4D symbol (4)")
        if not 0 <= m.k_bits <= m.block_len * int(math.log2(side // 2)):
            raise ConfigError(f"modulation.k_bits: {m.k_bits} too large for M={m.M}")
    for key, conv in (("tx", cfg.tx.bandwidth_convention), ("rx", cfg.rx.bandwidth_convention)):
        if conv not in ("two-sided", "one-sided"):
            raise ConfigError(f"{key}.bandwidth_convention: expected 'two-sided' or 'one-sided', got {conv!r}")
    if cfg.tx.sps < 2:
        raise ConfigError("tx.sps: must be >= 2")
    if not 0 <= cfg.tx.rolloff <= 1:
        raise ConfigError("tx.rolloff: must lie in [0, 1]")
    if not 0 <= cfg.nlpr.kappa <= 1:
        raise ConfigError("nlpr.kappa: must lie in [0, 1]")
    if cfg.sim.n_symbols <= 2 * cfg.sim.guard:
        raise ConfigError("sim.n_symbols: must exceed twice the guard")
    for key, f in (("hpoa.fiber", cfg.hpoa.fiber), ("pigtail", cfg.pigtail)):
        if f.length_m <= 0:
            raise ConfigError(f"{key}.length_m: must be positive")
        if f.gamma_per_w_km < 0 or f.alpha_db_per_km < 0:
            raise ConfigError(f"{key}: gamma and alpha must be non-negative")
    if cfg.hpoa.profile is not None:
        try:
            prof = PowerProfile(cfg.hpoa.profile)
        except ValueError as exc:
            raise ConfigError(f"hpoa.profile: {exc}") from None
        if not math.isclose(prof.length, cfg.hpoa.fiber.length_m):
            raise ConfigError("hpoa.profile: last breakpoint must sit at hpoa.fiber.length_m")


def _build(base, data: dict, path: str):
    """Overlay ``data`` on the dataclass instance ``base``; nested tables recurse."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    kwargs = {}
    names = {f.name for f in dataclasses.fields(base)}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in names:
            raise ConfigError(f"{where}: unknown key")
        default = getattr(base, key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(default, value, where)
        elif key == "profile":
            try:
                kwargs[key] = tuple((float(z), float(p)) for z, p in value)
            except (TypeError, ValueError):
                raise ConfigError(f"{where}: expected a list of [z_m, power_db] pairs") from None
        else:
            kwargs[key] = _coerce(value, default, where)
    return replace(base, **kwargs)


def _coerce(value, default, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def from_dict(data: dict) -> LinkConfig:
    return _build(LinkConfig(), data, "")


def load_config(path) -> LinkConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data)


# Curve modes, each a transformation of the base config.
MODES = ("uniform", "shaped", "shaped_tx_nlpr", "shaped_split_nlpr", "ideal", "linear")


def apply_mode(cfg: LinkConfig, mode: str) -> LinkConfig:
    """Derive the per-mode config used by ``curve``.

    ``shaped_split_nlpr`` keeps the base config's kappa; ``ideal`` is full TX
    NLPR with both front ends unlimited; ``linear`` sets gamma to zero.
    """
    shaped = replace(cfg.modulation, shaped=True)
    off = replace(cfg.nlpr, enabled=False)
    if mode == "uniform":
        return replace(cfg, modulation=replace(cfg.modulation, shaped=False), nlpr=off)
    if mode == "shaped":
        return replace(cfg, modulation=shaped, nlpr=off)
    if mode == "shaped_tx_nlpr":
        return replace(cfg, modulation=shaped, nlpr=replace(cfg.nlpr, enabled=True, kappa=1.0))
    if mode == "shaped_split_nlpr":
        return replace(cfg, modulation=shaped, nlpr=replace(cfg.nlpr, enabled=True))
    if mode == "ideal":
        return replace(
            cfg,
            modulation=shaped,
            nlpr=replace(cfg.nlpr, enabled=True, kappa=1.0),
            tx=replace(cfg.tx, bandwidth_hz=math.inf),
            rx=replace(cfg.rx, bandwidth_hz=math.inf),
        )
    if mode == "linear":
        return replace(
            cfg,
            modulation=shaped,
            nlpr=off,
            hpoa=replace(cfg.hpoa, fiber=replace(cfg.hpoa.fiber, gamma_per_w_km=0.0)),
            pigtail=replace(cfg.pigtail, gamma_per_w_km=0.0),
        )
    raise ValueError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")


def preset_for_target(cfg: LinkConfig, target_gmi: float) -> LinkConfig:
    """64QAM with 4.5 bit/2D shaping for target 3; 256QAM with 6.5 bit/2D for target 5."""
    if target_gmi == 3:
        mod = replace(cfg.modulation, M=64, k_bits=5)
    elif target_gmi == 5:
        mod = replace(cfg.modulation, M=256, k_bits=9)
    else:
        return cfg
    return replace(cfg, modulation=mod)

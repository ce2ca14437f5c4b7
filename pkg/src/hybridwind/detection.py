"""Noise, SNR budgets, matched filtering and 5-sigma coupling thresholds."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import signal as _signal

from .errors import ConfigurationError, DomainError, ResolutionError
from .filter import (FilterResponse, PulseSequence, SequenceKind, build_sequence,
                     filter_magnitude, passband_analysis, xi_grid)
from .physics import (HaloModel, axion_angular_frequency, axion_coherence_time,
                      dimensionless_coupling, field_per_coupling)
from .transduction import (SMALL_SIGNAL_LIMIT, SensorStack, hybrid_gain)
from .wind import TimeSeries

__all__ = [
    "DETECTION_SIGMA",
    "NoiseModel",
    "SNRBudget",
    "Protocol",
    "ProtocolLimits",
    "ProtocolChoice",
    "SensitivityPoint",
    "SensitivityCurve",
    "effective_integration",
    "channel_snr",
    "snr_ratio",
    "psd",
    "matched_filter_statistic",
    "matched_filter_snr",
    "select_protocol",
    "sequence_passband",
    "five_sigma_threshold",
    "sensitivity_scan",
]

DETECTION_SIGMA = 5.0


@dataclass(frozen=True)
class NoiseModel:
    """White magnetic noise floors with an optional 1/f excess.

    Floors are one-sided amplitude spectral densities in T/sqrt(Hz). A zero
    floor is allowed here (noiseless studies) but not in a SensorStack.
    """

    eta_e: float = 1e-15
    eta_n: float = 1e-12
    corner_hz: Optional[float] = None
    exponent: float = 1.0
    readout_variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.eta_e < 0 or self.eta_n < 0:
            raise DomainError("noise floors must be non-negative")
        if not 0 <= self.exponent <= 2:
            raise DomainError("1/f exponent must lie in [0, 2]")
        if self.readout_variance < 0:
            raise DomainError("readout variance must be non-negative")

    @classmethod
    def from_stack(cls, stack: SensorStack, **kw):
        return cls(eta_e=stack.eta_e, eta_n=stack.eta_n, **kw)

    def sample_sigma(self, dt, channel="electron", baseband=False):
        """Per-sample noise std (per quadrature at baseband) for step ``dt``."""
        eta = self.eta_e if channel == "electron" else self.eta_n
        scale = math.sqrt(1.0 + self.readout_variance)
        return scale * eta / math.sqrt(dt if baseband else 2 * dt)

    def synthesize(self, n, dt, rng, channel="electron", baseband=False):
        sigma = self.sample_sigma(dt, channel, baseband)
        if baseband:
            x = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        else:
            x = sigma * rng.standard_normal(n)
        if self.corner_hz:
            f = np.fft.fftfreq(n, dt)
            shape = np.sqrt(1.0 + (self.corner_hz / np.maximum(np.abs(f), 1.0 / (n * dt))) ** self.exponent)
            x = np.fft.ifft(np.fft.fft(x) * shape)
            if not baseband:
                x = x.real
        return x


@dataclass(frozen=True)
class SNRBudget:
    channel: str
    t_coh: float
    stacking: float
    per_segment: float
    total: float


def effective_integration(t2, tau_a, t_obs):
    """Coherent time min(T2, tau_a, T_obs) and the number of such segments in T_obs."""
    if not (t2 > 0 and tau_a > 0 and t_obs > 0):
        raise DomainError("integration times must be positive")
    t_coh = min(t2, tau_a, t_obs)
    return t_coh, max(1, math.floor(t_obs / t_coh))


def channel_snr(b_eff, eta_b, t_coh, stacking, exponent=0.25, channel="electron",
                omega_a=None, omega_ref=2 * math.pi) -> SNRBudget:
    """Amplitude SNR B sqrt(T_coh)/eta, times stacking^exponent across segments.

    The inductive-baseline channel multiplies the field by omega_a/omega_ref
    (pickup voltage ~ dPhi/dt); only its frequency scaling is meaningful.
    """
    if eta_b <= 0 or t_coh <= 0 or stacking < 1:
        raise DomainError("channel_snr needs positive noise, time and stacking >= 1")
    if channel == "inductive":
        if omega_a is None:
            raise ConfigurationError("inductive channel needs omega_a")
        b_eff = b_eff * omega_a / omega_ref
    elif channel not in ("electron", "nuclear"):
        raise ConfigurationError(f"unknown channel {channel!r}")
    per = b_eff * math.sqrt(t_coh) / eta_b
    total = per * stacking**exponent if stacking > 1 else per
    return SNRBudget(channel, t_coh, stacking, per, total)


def snr_ratio(stack: SensorStack, omega_a, t_eff_e=None, t_eff_n=None, y_mag=None):
    """SNR_e/SNR_N = G_hyb (eta_N/eta_e) sqrt(T_eff^e / T_eff^N)."""
    t_e = stack.coherence_e if t_eff_e is None else t_eff_e
    t_n = stack.coherence_n if t_eff_n is None else t_eff_n
    return hybrid_gain(stack, omega_a, y_mag) * (stack.eta_n / stack.eta_e) * math.sqrt(t_e / t_n)


def psd(series, window="rect", dt=None):
    """One-sided periodogram (units^2/Hz); sum(P) df equals the windowed mean square.

    The window is scaled to unit RMS so broadband levels are unbiased.
    """
    if isinstance(series, TimeSeries):
        x, dt = series.samples, series.dt
    else:
        x = np.asarray(series)
        if dt is None:
            raise ConfigurationError("psd needs dt for raw arrays")
    if x.size < 64:
        raise ResolutionError(f"psd needs at least 64 samples, got {x.size}")
    if window in ("rect", "rectangular", None):
        win = "boxcar"
    elif window == "hann":
        win = "hann"
    else:
        raise ConfigurationError(f"unknown window {window!r}")
    f, p = _signal.periodogram(x, fs=1.0 / dt, window=win, detrend=False,
                               return_onesided=not np.iscomplexobj(x), scaling="density")
    return f, p


def _as_array(x):
    return x.samples if isinstance(x, TimeSeries) else np.asarray(x)


def matched_filter_statistic(series, template, sigma):
    """Signed Re<x, t> / (sigma |t|); unit variance under white noise of std sigma."""
    x, t = _as_array(series), _as_array(template)
    if x.shape != t.shape:
        raise ConfigurationError("series and template lengths differ")
    norm = np.sqrt(np.vdot(t, t).real)
    if norm == 0:
        raise DomainError("matched filter template is identically zero")
    inner = np.vdot(t, x).real
    if sigma == 0:
        return math.copysign(math.inf, inner) if inner else 0.0
    return inner / (sigma * norm)


def matched_filter_snr(series, template, noise, channel="electron"):
    """|<x, t>| / (sigma |t|).

    ``noise`` is a per-sample sigma or a NoiseModel (sigma then follows from
    the white floor and the series step; complex series are baseband).
    """
    if isinstance(noise, NoiseModel):
        if not isinstance(series, TimeSeries):
            raise ConfigurationError("a NoiseModel needs a TimeSeries to fix dt")
        sigma = noise.sample_sigma(series.dt, channel, np.iscomplexobj(series.samples))
    else:
        sigma = float(noise)
    return abs(matched_filter_statistic(series, template, sigma))


# --- protocols -------------------------------------------------------------------


class Protocol(str, enum.Enum):
    RAMSEY = "ramsey"
    HAHN = "hahn"
    XY8 = "xy8"
    SPINLOCK = "spinlock"

    @classmethod
    def parse(cls, p):
        if isinstance(p, cls):
            return p
        try:
            return cls(str(p).strip().lower().replace("-", ""))
        except ValueError:
            raise ConfigurationError(f"unknown protocol {p!r}; expected one of {[x.value for x in cls]}") from None


ALL_PROTOCOLS = (Protocol.RAMSEY, Protocol.HAHN, Protocol.XY8, Protocol.SPINLOCK)

# Ramsey is low-pass; operate inside its -3 dB edge at xi = 0.443
RAMSEY_DESIGN_XI = 0.4


@dataclass(frozen=True)
class ProtocolLimits:
    min_spacing: float = 10e-6  # s, shortest free-evolution interval between pulses
    max_pulses: int = 4096


@dataclass(frozen=True)
class ProtocolChoice:
    protocol: Protocol
    sequence: Optional[PulseSequence]
    y_mag: float  # |Y_N(w_a)|, s
    electron_efficiency: float  # |F_e(w_a)|/tau_e, 1 without a pulsed probe
    coherence_e: float  # electron coherence cap, s
    in_band: bool
    flags: tuple = ()

    @property
    def tau(self):
        return self.sequence.tau if self.sequence is not None else float("nan")

    @property
    def n_pi(self):
        return self.sequence.n_pi if self.sequence is not None else 0


def sequence_passband(seq: PulseSequence, points=801):
    """Half-power passband of ``seq`` from its closed-form filter on a local grid."""
    if seq.kind is SequenceKind.RAMSEY:
        grid = xi_grid(seq.tau, 2.0, points)
    else:
        c = seq.n_pi / 2
        grid = xi_grid(seq.tau, c + 3.0, points, xi_min=max(0.0, c - 3.0))
    mag = filter_magnitude(seq, grid)
    resp = FilterResponse(grid, mag.astype(complex), {"tau": seq.tau})
    return passband_analysis(resp)


def _unit_center(kind, n_pi):
    return sequence_passband(build_sequence(kind, 1.0, n_pi)).center


def spinlock_response(omega_a, t2_n):
    """Continuously monitored nuclear response 1/sqrt(w^2 + T2^-2), in s."""
    return 1.0 / math.hypot(omega_a, 1.0 / t2_n)


def select_protocol(protocol, omega_a, stack: SensorStack, limits: ProtocolLimits = ProtocolLimits()):
    """Pick (tau, N_pi) placing the nuclear passband on w_a with tau <= T2N."""
    protocol = Protocol.parse(protocol)
    f = omega_a / (2 * math.pi)
    t2n = stack.coherence_n
    flags = []
    if protocol is Protocol.SPINLOCK:
        in_band = f < stack.rabi / (2 * math.pi)
        if not in_band:
            flags.append("above_rabi")
        return ProtocolChoice(protocol, None, spinlock_response(omega_a, t2n), 1.0,
                              stack.t1rho_e, in_band, tuple(flags))
    if protocol is Protocol.RAMSEY:
        tau = min(t2n, RAMSEY_DESIGN_XI / f)
        seq = build_sequence("ramsey", tau, 0)
        spacing = tau
    elif protocol is Protocol.HAHN:
        tau = min(t2n, _unit_center("hahn", 1) / f)
        seq = build_sequence("hahn", tau, 1)
        spacing = tau / 2
    else:
        k = int(2 * f * t2n // 8)
        n = 8 * max(1, min(k, limits.max_pulses // 8))
        tau = min(t2n, _unit_center("xy8", n) / f)
        seq = build_sequence("xy8", tau, n)
        spacing = tau / n
    in_band = sequence_passband(seq).contains(f)
    if not in_band:
        flags.append("outside_passband")
    if spacing < limits.min_spacing:
        in_band = False
        flags.append("pulse_spacing")
    eff = 1.0
    if stack.electron_probe is not None:
        eff = filter_magnitude(stack.electron_probe, omega_a) / stack.electron_probe.tau
    return ProtocolChoice(protocol, seq, float(filter_magnitude(seq, omega_a)), float(eff),
                          stack.coherence_e, bool(in_band), tuple(flags))


@dataclass
class SensitivityPoint:
    m_a: float
    omega_a: float
    protocol: str
    tau: float
    n_pi: int
    g5: float  # GeV^-1
    g_an: float
    mc_low: float = float("nan")
    mc_high: float = float("nan")
    flags: tuple = ()
    g5_nuclear: float = float("nan")  # direct nuclear readout, same enhancements
    mc_g50: float = float("nan")

    @property
    def in_band(self):
        return "out_of_band" not in self.flags


def _chain(m_a, stack, protocol, halo, limits):
    omega_a = axion_angular_frequency(m_a)
    tau_a = axion_coherence_time(m_a, halo)
    choice = select_protocol(protocol, omega_a, stack, limits)
    seq = choice.sequence if choice.sequence is not None else stack.sequence
    return omega_a, tau_a, choice, stack.replace(sequence=seq)


def analytic_g5(stack: SensorStack, omega_a, tau_a, y_mag, b_per_g, electron_efficiency=1.0,
                coherence_e=None, exponent=0.25):
    """Closed-form 5-sigma coupling for a fixed nuclear filter value ``y_mag``.

    ``b_per_g`` is the single-spin field per unit coupling (T GeV). Returns
    inf when the chain has zero gain.
    """
    gain = stack.f_ent * stack.g_res * hybrid_gain(stack, omega_a, y_mag) * electron_efficiency
    t_e = stack.coherence_e if coherence_e is None else coherence_e
    t_coh, n_seg = effective_integration(t_e, tau_a, stack.t_obs)
    per_g = gain * b_per_g
    if not per_g > 0:
        return math.inf
    return DETECTION_SIGMA / channel_snr(per_g, stack.eta_e, t_coh, n_seg, exponent).total


def five_sigma_threshold(m_a, stack: SensorStack, protocol, halo: HaloModel,
                         limits: ProtocolLimits = ProtocolLimits(), exponent=0.25) -> SensitivityPoint:
    """Coupling at which the electron-channel amplitude SNR reaches 5."""
    omega_a, tau_a, choice, s = _chain(m_a, stack, protocol, halo, limits)
    b_per_g = field_per_coupling(halo, stack.isotope)
    g5 = analytic_g5(s, omega_a, tau_a, choice.y_mag, b_per_g, choice.electron_efficiency,
                     choice.coherence_e, exponent)
    # direct nuclear readout with the same ensemble/resonator enhancement
    t_n, n_n = effective_integration(stack.coherence_n, tau_a, stack.t_obs)
    snr_n = channel_snr(stack.f_ent * stack.g_res * b_per_g, stack.eta_n, t_n, n_n, exponent,
                        channel="nuclear").total
    flags = list(choice.flags)
    if not choice.in_band:
        flags.insert(0, "out_of_band")
    if math.isfinite(g5):
        phi = abs(stack.isotope.gamma_n) * g5 * b_per_g * choice.y_mag
        if phi > SMALL_SIGNAL_LIMIT:
            flags.append("large_phase")
    return SensitivityPoint(
        m_a=float(m_a), omega_a=float(omega_a), protocol=choice.protocol.value,
        tau=choice.tau, n_pi=choice.n_pi, g5=float(g5), g_an=float(dimensionless_coupling(g5)),
        flags=tuple(flags), g5_nuclear=DETECTION_SIGMA / snr_n,
    )


@dataclass
class SensitivityCurve:
    protocol: str
    points: list
    meta: dict = field(default_factory=dict)

    @property
    def masses(self):
        return np.array([p.m_a for p in self.points])

    @property
    def g5(self):
        return np.array([p.g5 for p in self.points])

    @property
    def in_band(self):
        return np.array([p.in_band for p in self.points])

    def best(self):
        pts = [p for p in self.points if p.in_band and math.isfinite(p.g5)]
        return min(pts, key=lambda p: p.g5) if pts else None


def sensitivity_scan(masses, protocols, stack: SensorStack, halo: HaloModel,
                     limits: ProtocolLimits = ProtocolLimits(), exponent=0.25):
    """One curve per protocol plus the per-mass envelope (key ``"envelope"``)."""
    masses = np.asarray(masses, dtype=float)
    if masses.ndim != 1 or masses.size == 0:
        raise ConfigurationError("mass grid must be a non-empty 1-D array")
    if np.any(np.diff(masses) <= 0):
        raise ConfigurationError("mass grid must be sorted ascending")
    protocols = [Protocol.parse(p) for p in protocols]
    meta = {"eta_e": stack.eta_e, "eta_n": stack.eta_n, "n_spins": stack.n_spins,
            "entanglement": stack.entanglement, "q_factor": stack.q_factor,
            "isotope": stack.isotope.name, "t_obs": stack.t_obs, "stacking_exponent": exponent}
    curves = {}
    for p in protocols:
        pts = [five_sigma_threshold(m, stack, p, halo, limits, exponent) for m in masses]
        curves[p.value] = SensitivityCurve(p.value, pts, dict(meta))
    env = []
    for i, m in enumerate(masses):
        cands = [c.points[i] for c in curves.values() if c.points[i].in_band]
        if cands:
            best = min(cands, key=lambda q: q.g5)
            env.append(SensitivityPoint(**{**asdict(best)}))
        else:
            omega = axion_angular_frequency(m)
            env.append(SensitivityPoint(float(m), float(omega), "none", float("nan"), 0,
                                        float("nan"), float("nan"), flags=("out_of_band",)))
    curves["envelope"] = SensitivityCurve("envelope", env, dict(meta))
    return curves

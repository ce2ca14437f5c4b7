"""Hyperfine upconversion: nuclear phase -> electron frequency modulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import signal as _signal
from scipy import special as _special

from .errors import ConfigurationError, DomainError
from .filter import PulseSequence, build_sequence, filter_magnitude
from .physics import CONSTANTS, IsotopeParams, lookup
from .wind import TimeSeries

__all__ = [
    "SMALL_SIGNAL_LIMIT",
    "SensorStack",
    "NuclearPhase",
    "ElectronSignal",
    "entanglement_factor",
    "resonator_gain",
    "nuclear_phase",
    "iz_shift",
    "hybrid_gain",
    "electron_fm_deviation",
    "effective_electron_field",
    "fm_sideband_amplitudes",
    "spin_lock_series",
    "demodulated_phase",
]

SMALL_SIGNAL_LIMIT = 0.1  # rad; sin(x) = x to 0.2% here

_ENTANGLEMENT = ("sql", "ideal")


def entanglement_factor(n_spins, model="sql"):
    """Collective enhancement: sqrt(N) at the SQL, N for an ideal entangled state."""
    if n_spins < 1:
        raise DomainError("ensemble size must be >= 1")
    if model == "sql":
        return math.sqrt(n_spins)
    if model == "ideal":
        return float(n_spins)
    raise ConfigurationError(f"unknown entanglement model {model!r}; expected one of {_ENTANGLEMENT}")


def resonator_gain(q, q_ref=1.0, exponent=0.5):
    """(Q / Q_ref)^p, clamped below at unity."""
    if q < 1:
        raise DomainError("resonator quality factor must be >= 1")
    return max(1.0, (q / q_ref) ** exponent)


@dataclass(frozen=True)
class SensorStack:
    """Configuration of the full transduction chain.

    ``electron_probe`` is the pulsed electron sequence; when set, the
    normalized electron filter |F_e(w_a)|/tau_e multiplies the signal.
    Coherence times left as None fall back to the isotope table.
    """

    isotope: IsotopeParams
    sequence: PulseSequence
    g_drv: float = 1.0
    kappa: float = 1.0
    n_spins: float = 1.0
    entanglement: str = "sql"
    q_factor: float = 1.0
    q_ref: float = 1.0
    res_exponent: float = 0.5
    eta_e: float = 1e-15  # T/sqrt(Hz)
    eta_n: float = 1e-12  # T/sqrt(Hz)
    t2_e: Optional[float] = None
    t2_n: Optional[float] = None
    t_obs: float = 365.25 * 86400.0
    electron_probe: Optional[PulseSequence] = None
    t1rho_e: float = 10.0  # electron coherence under spin lock, s
    rabi: float = 2 * math.pi * 50e3  # spin-lock Rabi frequency, rad/s

    def __post_init__(self):
        if self.n_spins < 1:
            raise DomainError("ensemble size N must be >= 1")
        if self.q_factor < 1:
            raise DomainError("resonator Q must be >= 1")
        if not self.g_drv > 0:
            raise DomainError("G_drv must be positive")
        if not (self.eta_e > 0 and self.eta_n > 0):
            raise DomainError("noise floors must be positive")
        if not self.kappa > 0:
            raise DomainError("dispersive correction must be positive")
        if self.entanglement not in _ENTANGLEMENT:
            raise ConfigurationError(f"unknown entanglement model {self.entanglement!r}")
        for name in ("t2_e", "t2_n", "t_obs", "t1rho_e"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive")

    @classmethod
    def default(cls, isotope="Bi209", **kw):
        iso = lookup(isotope) if isinstance(isotope, str) else isotope
        kw.setdefault("sequence", build_sequence("ramsey", iso.t2_nuclear, 0))
        return cls(isotope=iso, **kw)

    @property
    def coherence_e(self):
        return self.t2_e if self.t2_e is not None else self.isotope.t2_electron

    @property
    def coherence_n(self):
        return self.t2_n if self.t2_n is not None else self.isotope.t2_nuclear

    @property
    def f_ent(self):
        return entanglement_factor(self.n_spins, self.entanglement)

    @property
    def g_res(self):
        return resonator_gain(self.q_factor, self.q_ref, self.res_exponent)

    def replace(self, **kw) -> "SensorStack":
        return replace(self, **kw)


@dataclass(frozen=True)
class NuclearPhase:
    amplitude: float  # rad
    small_signal: bool


@dataclass(frozen=True)
class ElectronSignal:
    delta_omega: float  # rad/s
    omega_a: float  # rad/s
    beta: float
    b_eff: float  # T


def nuclear_phase(b_a, seq: PulseSequence, omega_a, isotope: IsotopeParams) -> NuclearPhase:
    """Accumulated phase amplitude gamma_N B_a |Y_N(w_a)|."""
    if b_a < 0:
        raise DomainError("field amplitude must be non-negative")
    phi = abs(isotope.gamma_n) * b_a * filter_magnitude(seq, omega_a)
    return NuclearPhase(float(phi), bool(phi <= SMALL_SIGNAL_LIMIT))


def iz_shift(phi_n, spin):
    """Polarization change I * phi_N after the final pi/2 pulse."""
    return spin * phi_n


def hybrid_gain(stack: SensorStack, omega_a, y_mag=None):
    """(A I / gamma_e) gamma_N |Y_N(w_a)| G_drv kappa, dimensionless.

    ``y_mag`` overrides the filter magnitude (e.g. for continuous readout).
    """
    iso = stack.isotope
    if y_mag is None:
        y_mag = filter_magnitude(stack.sequence, omega_a)
    return (iso.hyperfine * iso.spin / CONSTANTS.gamma_e) * abs(iso.gamma_n) * y_mag \
        * stack.g_drv * stack.kappa


def electron_fm_deviation(stack: SensorStack, b_a, omega_a, y_mag=None) -> ElectronSignal:
    """FM deviation A_eff I gamma_N |Y_N| B_a of the electron Larmor frequency."""
    iso = stack.isotope
    if y_mag is None:
        y_mag = filter_magnitude(stack.sequence, omega_a)
    a_eff = iso.hyperfine * stack.g_drv
    dw = stack.kappa * a_eff * iso.spin * abs(iso.gamma_n) * y_mag * b_a
    return ElectronSignal(float(dw), float(omega_a), float(dw / omega_a), float(dw / CONSTANTS.gamma_e))


def effective_electron_field(stack: SensorStack, b_a_single, omega_a, y_mag=None):
    """F_ent G_res G_hyb B_a."""
    return stack.f_ent * stack.g_res * hybrid_gain(stack, omega_a, y_mag) * b_a_single


def fm_sideband_amplitudes(beta, n_max):
    """[(n, J_n(beta)) for n = 0..n_max]; order -n has amplitude (-1)^n J_n."""
    if n_max < 1:
        raise ConfigurationError("n_max must be >= 1")
    orders = np.arange(int(n_max) + 1)
    return list(zip(orders.tolist(), _special.jv(orders, beta).tolist()))


def spin_lock_series(rabi, omega_a, delta_omega, duration, dt, t0=0.0) -> TimeSeries:
    """<S_x(t)> = 1/2 cos(Omega_R t + beta sin(w_a t)) under continuous spin lock."""
    if dt > 2 * math.pi / (10 * rabi):
        raise ConfigurationError(
            f"dt={dt!r} s under-samples the Rabi tone; need dt <= {2 * math.pi / (10 * rabi)!r} s"
        )
    n = int(round(duration / dt))
    t = t0 + dt * np.arange(n)
    beta = delta_omega / omega_a
    return TimeSeries(t0, dt, 0.5 * np.cos(rabi * t + beta * np.sin(omega_a * t)), "Sx")


def demodulated_phase(series: TimeSeries, rabi):
    """Instantaneous phase of ``series`` relative to the Rabi carrier."""
    z = _signal.hilbert(series.samples)
    return np.unwrap(np.angle(z * np.exp(-1j * rabi * series.times)))

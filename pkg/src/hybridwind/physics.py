"""Constants, unit conversion, donor tables and the axion/halo model.

All public functions take and return SI quantities (rad/s, s, T) except
where a particle-physics unit is conventional: axion mass in eV, coupling
in GeV^-1, dark-matter density in GeV/cm^3. Every natural-unit to SI step
lives in the conversion helpers below.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np
from scipy import constants as _sc

from .errors import ConfigurationError, DomainError

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "IsotopeParams",
    "HaloModel",
    "load_isotopes",
    "lookup",
    "default_halo",
    "axion_angular_frequency",
    "axion_coherence_time",
    "axion_field_amplitude",
    "field_per_coupling",
    "dimensionless_coupling",
]


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float  # J s
    c: float  # m/s
    gamma_e: float  # rad/s/T, magnitude
    m_nucleon_kg: float
    m_nucleon_ev: float
    ev_to_omega: float  # rad/s per eV
    electron_volt: float  # J

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise DomainError(f"constant {name} must be positive, got {value}")


def _codata():
    pc = _sc.physical_constants
    m_p = pc["proton mass"][0]
    m_n = pc["neutron mass"][0]
    m_kg = 0.5 * (m_p + m_n)
    return PhysicalConstants(
        hbar=_sc.hbar,
        c=_sc.c,
        gamma_e=pc["electron gyromag. ratio"][0],
        m_nucleon_kg=m_kg,
        m_nucleon_ev=m_kg * _sc.c**2 / _sc.e,
        ev_to_omega=_sc.e / _sc.hbar,
        electron_volt=_sc.e,
    )


CONSTANTS = _codata()

# --- conversion layer -------------------------------------------------------

_HBAR_C_EV_CM = CONSTANTS.hbar * CONSTANTS.c / CONSTANTS.electron_volt * 100.0


def ev_to_joule(energy_ev):
    return energy_ev * CONSTANTS.electron_volt


def gev_per_cm3_to_ev4(rho):
    """Energy density in GeV/cm^3 expressed in natural units (eV^4)."""
    return rho * 1e9 * _HBAR_C_EV_CM**3


def energy_ev_to_field(energy_ev, gamma):
    """Field (T) whose Zeeman energy hbar*gamma*B equals ``energy_ev``."""
    return ev_to_joule(energy_ev) / (CONSTANTS.hbar * abs(gamma))


def km_s_to_beta(v_km_s):
    return v_km_s * 1e3 / CONSTANTS.c


# --- tables -------------------------------------------------------------------


@dataclass(frozen=True)
class IsotopeParams:
    name: str
    spin: float
    gamma_n: float  # rad/s/T, signed
    hyperfine: float  # A in rad/s
    t2_nuclear: float  # s
    t2_electron: float  # s

    def __post_init__(self):
        twice = 2 * self.spin
        if self.spin <= 0 or abs(twice - round(twice)) > 1e-12:
            raise DomainError(f"{self.name}: nuclear spin must be a positive multiple of 1/2")
        if not self.hyperfine > 0:
            raise DomainError(f"{self.name}: hyperfine constant must be positive")
        if self.gamma_n == 0:
            raise DomainError(f"{self.name}: gamma_N must be non-zero")
        if not (self.t2_nuclear > 0 and self.t2_electron > 0):
            raise DomainError(f"{self.name}: coherence times must be positive")

    def with_overrides(self, **kw) -> "IsotopeParams":
        d = dict(self.__dict__)
        d.update(kw)
        return IsotopeParams(**d)


@dataclass(frozen=True)
class HaloModel:
    rho_dm: float = 0.4  # GeV/cm^3
    v0: float = 220e3  # m/s
    sun_direction: tuple = (0.0, 1.0, 0.0)
    epsilon: float = 0.05

    def __post_init__(self):
        if not self.rho_dm > 0:
            raise DomainError("rho_dm must be positive")
        if not 0 < self.v0 < CONSTANTS.c:
            raise DomainError("v0 must lie in (0, c)")
        if not 0 <= self.epsilon < 1:
            raise DomainError("epsilon must lie in [0, 1)")
        norm = math.sqrt(sum(x * x for x in self.sun_direction))
        if abs(norm - 1) > 1e-9:
            raise DomainError("sun_direction must be a unit vector")

    @property
    def beta(self):
        return self.v0 / CONSTANTS.c


def _read_table(path=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if path is None:
        text = resources.files("hybridwind").joinpath("data/isotopes.ini").read_text()
        parser.read_string(text)
    else:
        with open(path) as fh:
            parser.read_file(fh)
    return parser


def _isotope_from_section(name, sec):
    try:
        return IsotopeParams(
            name=name,
            spin=float(Fraction(sec["spin"].strip())),
            gamma_n=2 * math.pi * float(sec["gamma_n_hz_per_t"]),
            hyperfine=2 * math.pi * float(sec["hyperfine_hz"]),
            t2_nuclear=float(sec["t2_nuclear_s"]),
            t2_electron=float(sec["t2_electron_s"]),
        )
    except KeyError as exc:
        raise ConfigurationError(f"isotope [{name}] missing key {exc.args[0]!r}") from None


def load_isotopes(path=None) -> dict:
    """Read every isotope section from a data file (packaged table by default)."""
    parser = _read_table(path)
    return {s: _isotope_from_section(s, parser[s]) for s in parser.sections() if s != "halo"}


def lookup(name: str, path=None) -> IsotopeParams:
    table = load_isotopes(path)
    try:
        return table[name]
    except KeyError:
        raise ConfigurationError(f"unknown isotope {name!r}; known: {sorted(table)}") from None


def default_halo(path=None) -> HaloModel:
    sec = _read_table(path)["halo"]
    direction = tuple(float(x) for x in sec["sun_direction"].split(","))
    return HaloModel(
        rho_dm=float(sec["rho_dm"]),
        v0=float(sec["v0"]) * 1e3,
        sun_direction=direction,
        epsilon=float(sec["epsilon"]),
    )


# --- axion model --------------------------------------------------------------


def _check_mass(m_a):
    m = np.asarray(m_a, dtype=float)
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise DomainError(f"axion mass must be positive and finite, got {m_a!r}")
    return m


def axion_angular_frequency(m_a):
    """Compton angular frequency (rad/s) of an axion of mass ``m_a`` eV."""
    m = _check_mass(m_a)
    out = m * CONSTANTS.ev_to_omega
    return float(out) if out.ndim == 0 else out


def axion_coherence_time(m_a, halo: HaloModel):
    """Coherence time 2 pi / (omega_a beta0^2) in seconds."""
    omega = axion_angular_frequency(m_a)
    return 2 * math.pi / (omega * halo.beta**2)


def field_per_coupling(halo: HaloModel, isotope: IsotopeParams) -> float:
    """dB_{a,0}/dg_aNN in T per GeV^-1.

    The wind gradient is |grad a| = sqrt(2 rho) * v0 (natural units). With
    g_aNN in GeV^-1 the spin energy is g_aNN |grad a| / 2, i.e. the
    dimensionless g_an = m_N g_aNN over 2 m_N.
    """
    grad_a_ev2 = math.sqrt(2 * gev_per_cm3_to_ev4(halo.rho_dm)) * halo.beta
    energy_ev_per_gev_inv = 1e-9 * grad_a_ev2 / 2
    return energy_ev_to_field(energy_ev_per_gev_inv, isotope.gamma_n)


def axion_field_amplitude(g_aNN, halo: HaloModel, isotope: IsotopeParams):
    """Effective axion-wind field amplitude B_{a,0} in tesla."""
    g = np.asarray(g_aNN, dtype=float)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise DomainError("g_aNN must be finite and non-negative")
    out = g * field_per_coupling(halo, isotope)
    return float(out) if out.ndim == 0 else out


def dimensionless_coupling(g_aNN):
    """g_an = m_N g_aNN with m_N in GeV."""
    return np.asarray(g_aNN) * CONSTANTS.m_nucleon_ev * 1e-9

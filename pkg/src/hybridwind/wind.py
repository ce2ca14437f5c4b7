"""Lab-frame kinematics of the axion wind.

Geometry lives in an equatorial frame whose z axis is Earth's rotation
axis. The wind direction is given by its polar angle ``theta`` from that
axis and a phase; the quantization axis is built from the site latitude
and its tilt/azimuth relative to the local vertical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, ResolutionError
from .physics import (HaloModel, IsotopeParams, axion_angular_frequency,
                      axion_coherence_time, axion_field_amplitude)

__all__ = [
    "SIDEREAL_DAY",
    "OMEGA_SIDEREAL",
    "OMEGA_YEAR",
    "LabSite",
    "WindDirection",
    "TimeSeries",
    "SpectralLines",
    "lab_projection",
    "annual_velocity_factor",
    "renewal_epochs",
    "wind_field_series",
    "modulation_spectrum",
]

SIDEREAL_DAY = 86164.0905  # s
YEAR = 365.25 * 86400.0  # s
OMEGA_SIDEREAL = 2 * math.pi / SIDEREAL_DAY
OMEGA_YEAR = 2 * math.pi / YEAR


@dataclass(frozen=True)
class LabSite:
    latitude: float  # rad
    tilt: float = 0.0  # quantization axis from local vertical, rad
    azimuth: float = 0.0  # tilt direction, from north towards east, rad

    def __post_init__(self):
        if not -math.pi / 2 <= self.latitude <= math.pi / 2:
            raise ConfigurationError("latitude must lie in [-pi/2, pi/2]")

    def axis(self):
        """Quantization axis in the equatorial frame at t = 0 (site on the x-z plane)."""
        lat, a, b = self.latitude, self.tilt, self.azimuth
        up = np.array([math.cos(lat), 0.0, math.sin(lat)])
        north = np.array([-math.sin(lat), 0.0, math.cos(lat)])
        east = np.array([0.0, 1.0, 0.0])
        v = math.cos(a) * up + math.sin(a) * (math.cos(b) * north + math.sin(b) * east)
        return v / np.linalg.norm(v)

    def colatitude_and_phase(self):
        x, y, z = self.axis()
        return math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x)


@dataclass(frozen=True)
class WindDirection:
    theta: float  # polar angle from the rotation axis, rad
    phase: float = 0.0  # sidereal phase offset phi0, rad

    @classmethod
    def from_equatorial(cls, declination, right_ascension=0.0):
        return cls(math.pi / 2 - declination, -right_ascension)

    @property
    def unit_vector(self):
        st = math.sin(self.theta)
        return np.array([st * math.cos(-self.phase), st * math.sin(-self.phase), math.cos(self.theta)])


# Solar motion points toward Cygnus (RA ~ 21h, Dec ~ +48 deg)
CYGNUS = WindDirection.from_equatorial(math.radians(48.0), math.radians(315.0))


@dataclass
class TimeSeries:
    t0: float
    dt: float
    samples: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if not self.dt > 0:
            raise ConfigurationError("TimeSeries dt must be positive")
        if self.samples.size < 2:
            raise ConfigurationError("TimeSeries needs at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigurationError("TimeSeries samples must be finite")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self):
        return self.samples.size * self.dt

    def __len__(self):
        return self.samples.size


def lab_projection(t, site: LabSite, direction: WindDirection, omega_star=OMEGA_SIDEREAL):
    """Projection of the wind direction on the rotating quantization axis."""
    theta_z, psi = site.colatitude_and_phase()
    t = np.asarray(t, dtype=float)
    out = (math.cos(theta_z) * math.cos(direction.theta)
           + math.sin(theta_z) * math.sin(direction.theta)
           * np.cos(omega_star * t + direction.phase + psi))
    return np.clip(out, -1.0, 1.0)


def annual_velocity_factor(t, halo: HaloModel, omega_year=OMEGA_YEAR, phase=0.0):
    """1 + epsilon cos(omega_year t + phase)."""
    return 1.0 + halo.epsilon * np.cos(omega_year * np.asarray(t, dtype=float) + phase)


def _philox(seed, stream=0):
    key = np.array([int(seed) & (2**64 - 1), int(stream) & (2**64 - 1)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def renewal_epochs(t0, duration, tau_a, seed, stream=0):
    """Epoch start times and phases of the phase-renewal process.

    Spacings are exponential with mean ``tau_a``; draw k of the stream is
    always the k-th epoch, so a given seed fixes the realization.
    """
    rng = _philox(seed, stream)
    starts = [t0 - tau_a * rng.standard_exponential()]  # stationary start
    phases = [2 * math.pi * rng.random()]
    t_end = t0 + duration
    block = max(16, int(2 * duration / tau_a) + 16) if math.isfinite(tau_a) else 1
    while starts[-1] <= t_end and math.isfinite(tau_a):
        gaps = tau_a * rng.standard_exponential(block)
        ph = 2 * math.pi * rng.random(block)
        nxt = starts[-1] + np.cumsum(gaps)
        starts.extend(nxt.tolist())
        phases.extend(ph.tolist())
    starts = np.asarray(starts)
    phases = np.asarray(phases)
    # keep the epoch covering t0 and everything through t_end
    first = np.searchsorted(starts, t0, side="right") - 1
    last = np.searchsorted(starts, t_end, side="right")
    return starts[first:last], phases[first:last]


def wind_field_series(g_aNN, m_a, halo: HaloModel, site: LabSite, direction: WindDirection,
                      duration, dt, rng_seed, isotope: IsotopeParams, t0=0.0,
                      baseband=False, annual_phase=0.0, tau_a=None, stream=0,
                      omega_star=OMEGA_SIDEREAL, omega_year=OMEGA_YEAR) -> TimeSeries:
    """Longitudinal axion field B_{a,z}(t) seen by the lab quantization axis.

    With ``baseband=True`` the complex envelope relative to the Compton
    carrier is returned instead, which allows sampling at the modulation
    scale rather than the carrier.
    """
    omega_a = axion_angular_frequency(m_a)
    if not duration > 0:
        raise ConfigurationError("duration must be positive")
    if not baseband and dt >= math.pi / omega_a:
        raise ConfigurationError(
            f"dt={dt!r} s violates Nyquist for the carrier; maximum allowed dt is {math.pi / omega_a!r} s"
        )
    n = int(math.floor(duration / dt + 1e-9))
    if tau_a is None:
        tau_a = axion_coherence_time(m_a, halo)
    starts, phases = renewal_epochs(t0, duration, tau_a, rng_seed, stream)
    carrier = _kernels.renewal_carrier(t0, dt, n, omega_a, starts, phases, baseband)
    t = t0 + dt * np.arange(n)
    amp = axion_field_amplitude(g_aNN, halo, isotope)
    envelope = amp * annual_velocity_factor(t, halo, omega_year, annual_phase) \
        * lab_projection(t, site, direction, omega_star)
    label = "B_az_envelope_T" if baseband else "B_az_T"
    return TimeSeries(t0, dt, envelope * carrier, label)


@dataclass
class SpectralLines:
    omega: np.ndarray  # rad/s, ascending
    amplitude: np.ndarray
    lines: list  # (omega, amplitude) of detected peaks, strongest first
    resolvable: dict

    def strongest(self, k, exclude_dc=True):
        lines = [ln for ln in self.lines if not (exclude_dc and ln[0] == 0.0)]
        return lines[:k]

    def amplitude_at(self, omega):
        return float(self.amplitude[np.argmin(np.abs(self.omega - omega))])


def _demodulate(series: TimeSeries, omega_a, decimate):
    x = series.samples
    if np.iscomplexobj(x):
        return x, series.dt
    env = 2.0 * x * np.exp(-1j * omega_a * series.times)
    if decimate > 1:
        m = env.size // decimate
        env = env[: m * decimate].reshape(m, decimate).mean(axis=1)
    return env, series.dt * max(decimate, 1)


def modulation_spectrum(series: TimeSeries, omega_a, window="hann", require=(),
                        decimate=1, rel_threshold=1e-3,
                        omega_star=OMEGA_SIDEREAL, omega_year=OMEGA_YEAR) -> SpectralLines:
    """Single-sided amplitude spectrum of the demodulated envelope.

    A real envelope component c cos(W t) reports amplitude c at W. Real
    input is mixed down at ``omega_a`` (block-mean decimation acts as the
    low-pass); complex input is taken as an envelope already.
    ``require`` may name "sidereal" and/or "annual"; an unresolvable
    request raises ResolutionError.
    """
    env, dt = _demodulate(series, omega_a, decimate)
    n = env.size
    duration = n * dt
    resolvable = {"sidereal": duration >= 2 * SIDEREAL_DAY, "annual": duration >= 2 * YEAR}
    for name in require:
        if not resolvable.get(name, False):
            need = 2 * SIDEREAL_DAY if name == "sidereal" else 2 * YEAR
            raise ResolutionError(
                f"{name} lines need a series of at least {need:.6g} s; got {duration:.6g} s"
            )
    if window == "hann":
        w = np.hanning(n + 1)[:n]  # periodic Hann
    elif window in ("rect", "rectangular", None):
        w = np.ones(n)
    else:
        raise ConfigurationError(f"unknown window {window!r}")
    spec = np.fft.fft(env * w) / w.sum()
    k = np.arange(n // 2 + 1)
    amp = np.abs(spec[k])
    amp[1:] += np.abs(spec[(-k[1:]) % n])
    if n % 2 == 0:
        amp[-1] = np.abs(spec[n // 2])
    omega = 2 * np.pi * k / duration
    peaks = []
    top = amp[1:].max() if amp.size > 1 else amp[0]
    floor = rel_threshold * max(top, amp[0])
    for i in range(amp.size):
        left = amp[i - 1] if i > 0 else -np.inf
        right = amp[i + 1] if i + 1 < amp.size else -np.inf
        if amp[i] >= floor and amp[i] > left and amp[i] >= right:
            peaks.append((float(omega[i]), float(amp[i])))
    peaks.sort(key=lambda p: -p[1])
    return SpectralLines(omega, amp, peaks, resolvable)

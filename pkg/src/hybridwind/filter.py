"""Pulse sequences, toggling functions and their spectral filters.

Convention: Y(w) = int_0^tau y(t) exp(i w t) dt, with y(t) in {0, +1, -1}.
Only |Y| carries physical meaning downstream. Pulses are instantaneous.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, ResolutionError

__all__ = [
    "SequenceKind",
    "PulseSequence",
    "FilterResponse",
    "PassbandReport",
    "build_sequence",
    "toggling",
    "filter_numeric",
    "filter_analytic_ramsey",
    "filter_analytic_echo_family",
    "electron_filter",
    "combined_response",
    "passband_analysis",
    "sequence_passband",
    "xi_grid",
    "filter_magnitude",
]


class SequenceKind(str, enum.Enum):
    RAMSEY = "ramsey"
    HAHN = "hahn"
    CPMG = "cpmg"
    XY8 = "xy8"

    @classmethod
    def parse(cls, kind):
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown sequence kind {kind!r}; expected one of {[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class PulseSequence:
    kind: SequenceKind
    tau: float
    n_pi: int
    pulse_times: tuple = ()

    def segments(self):
        """(signs, midpoints, lengths) of the constant-sign pieces of y(t)."""
        edges = np.concatenate(([0.0], np.asarray(self.pulse_times, dtype=float), [self.tau]))
        signs = np.where(np.arange(edges.size - 1) % 2 == 0, 1.0, -1.0)
        lengths = np.diff(edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return signs, mids, lengths

    def describe(self):
        return f"{self.kind.value}(tau={self.tau!r}s, n_pi={self.n_pi})"


def build_sequence(kind, tau, n_pi=None) -> PulseSequence:
    """Ideal pulse sequence with CPMG timing (k - 1/2) tau / N for k = 1..N."""
    kind = SequenceKind.parse(kind)
    if not (tau > 0 and math.isfinite(tau)):
        raise ConfigurationError(f"sensing duration must be positive, got {tau!r}")
    default = {SequenceKind.RAMSEY: 0, SequenceKind.HAHN: 1}
    if n_pi is None:
        if kind not in default:
            raise ConfigurationError(f"{kind.value} requires an explicit pulse count")
        n_pi = default[kind]
    if int(n_pi) != n_pi:
        raise ConfigurationError(f"pulse count must be an integer, got {n_pi!r}")
    n_pi = int(n_pi)
    ok = {
        SequenceKind.RAMSEY: n_pi == 0,
        SequenceKind.HAHN: n_pi == 1,
        SequenceKind.CPMG: n_pi >= 1,
        SequenceKind.XY8: n_pi >= 8 and n_pi % 8 == 0,
    }[kind]
    if not ok:
        raise ConfigurationError(f"pulse count {n_pi} inconsistent with {kind.value}")
    times = tuple((k - 0.5) * tau / n_pi for k in range(1, n_pi + 1))
    return PulseSequence(kind, float(tau), n_pi, times)


def toggling(seq: PulseSequence, t):
    """Evaluate y(t): +1 before the first pulse, flipping at each pulse, 0 outside [0, tau]."""
    t = np.asarray(t, dtype=float)
    flips = np.searchsorted(np.asarray(seq.pulse_times), t, side="right")
    y = np.where(flips % 2 == 0, 1.0, -1.0)
    return np.where((t >= 0) & (t <= seq.tau), y, 0.0)


@dataclass
class FilterResponse:
    omega: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def magnitude(self):
        return np.abs(self.values)

    @property
    def frequency(self):
        return self.omega / (2 * np.pi)

    @property
    def tau(self):
        return self.meta.get("tau")

    def normalized_power(self):
        """|F|^2 / tau^2."""
        return self.magnitude**2 / self.tau**2


def _check_grid(omega):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or omega.size < 1 or not np.all(np.isfinite(omega)):
        raise ConfigurationError("frequency grid must be a finite 1-D array")
    if omega.size > 1 and np.any(np.diff(omega) <= 0):
        raise ConfigurationError("frequency grid must be strictly increasing")
    return omega


def xi_grid(tau, xi_max, points, xi_min=0.0):
    """Angular-frequency grid uniform in xi = f tau."""
    return 2 * np.pi * np.linspace(xi_min, xi_max, int(points)) / tau


def filter_numeric(seq: PulseSequence, omega) -> FilterResponse:
    """Exact transform as a sum of closed-form segment integrals."""
    omega = _check_grid(omega)
    values = _kernels.segment_transform(omega, *seq.segments())
    return FilterResponse(
        omega, values,
        {"sequence": seq.describe(), "kind": seq.kind.value, "tau": seq.tau,
         "n_pi": seq.n_pi, "convention": "int_0^tau y(t) exp(+i w t) dt", "method": "segment-sum"},
    )


def filter_analytic_ramsey(tau, omega):
    """tau |sinc(w tau / 2)|."""
    omega = np.asarray(omega, dtype=float)
    x = 0.5 * omega * tau
    nz = x != 0
    out = np.full(x.shape, float(tau))
    out[nz] = tau * np.abs(np.sin(x[nz]) / x[nz])
    return out if out.ndim else float(out)


def filter_analytic_echo_family(seq: PulseSequence, omega):
    """|Y| for Hahn/CPMG/XY8 timing as a closed-form product.

    With spacing d = tau/N the sequence is N sign-alternating copies of a
    one-pulse cell, so with x = w d / 4
        |Y| = d |sin(x) sinc(x)| |sin(N (pi/2 + 2x)) / cos(2x)|.
    The last factor is the geometric series over cells. It is evaluated as
    |sin(N delta)/sin(delta)| with delta = 2x - (m + 1/2) pi reduced to
    [-pi/2, pi/2], which stays accurate at the passband poles (limit N).
    """
    if seq.kind is SequenceKind.RAMSEY:
        raise ConfigurationError("echo-family filter requested for a Ramsey sequence")
    omega = np.asarray(omega, dtype=float)
    scalar = omega.ndim == 0
    omega = np.atleast_1d(omega)
    n = seq.n_pi
    d = seq.tau / n
    out = np.zeros(omega.shape)
    nz = omega != 0
    x = 0.25 * omega[nz] * d
    cell = d * np.abs(np.sin(x) * np.sin(x) / x)
    r = omega[nz] * d / (2 * np.pi) - 0.5
    delta = np.pi * (r - np.round(r))
    array = np.full(x.shape, float(n))
    ok = delta != 0
    array[ok] = np.abs(np.sin(n * delta[ok]) / np.sin(delta[ok]))
    out[nz] = cell * array
    return float(out[0]) if scalar else out


def electron_filter(seq: PulseSequence, omega) -> FilterResponse:
    """Filter of the electron probe; same transform as the nuclear one."""
    resp = filter_numeric(seq, omega)
    resp.meta["role"] = "electron"
    return resp


def combined_response(f_e: FilterResponse, y_n: FilterResponse) -> FilterResponse:
    """H(w) = F_e(w) Y_N(w) on a shared grid."""
    if f_e.omega.shape != y_n.omega.shape or not np.array_equal(f_e.omega, y_n.omega):
        raise ConfigurationError("combined_response needs identical frequency grids")
    meta = {"parents": (dict(f_e.meta), dict(y_n.meta)), "role": "combined"}
    if f_e.tau is not None and y_n.tau is not None:
        meta["tau"] = f_e.tau * y_n.tau
    return FilterResponse(f_e.omega.copy(), f_e.values * y_n.values, meta)


@dataclass(frozen=True)
class PassbandReport:
    center: float  # Hz
    fwhm: float  # Hz, half-power width
    q: float
    peak: float  # |Y| at the peak, s
    f_low: float  # Hz, lower half-power edge (0 for low-pass)
    f_high: float  # Hz

    def contains(self, f):
        return self.f_low <= f <= self.f_high


def _crossing(f, p, i0, i1, level):
    # linear interpolation of p between samples i0 and i1 where it crosses level
    return f[i0] + (level - p[i0]) * (f[i1] - f[i0]) / (p[i1] - p[i0])


def passband_analysis(resp: FilterResponse, min_points=8) -> PassbandReport:
    """Center, half-power width and quality factor of the dominant lobe.

    The width is measured on |Y|^2 (-3 dB points), the usual definition
    behind a filter's quality factor. A grid starting at 0 whose maximum
    sits on the first sample is treated as low-pass.
    """
    f = resp.frequency
    mag = resp.magnitude
    if f.size < 3:
        raise ResolutionError("passband analysis needs at least 3 grid points")
    power = mag**2
    i = int(np.argmax(power))
    level = 0.5 * power[i]
    below = np.nonzero(power[i:] < level)[0]
    if below.size == 0:
        raise ResolutionError("grid does not reach the upper half-power edge; extend the grid")
    j = i + below[0]
    f_high = _crossing(f, power, j - 1, j, level)
    lowpass = i == 0 and f[0] == 0.0
    if lowpass:
        f_low, center, fwhm = 0.0, 0.0, 2.0 * f_high
        peak = mag[0]
    else:
        above = np.nonzero(power[:i] < level)[0]
        if above.size == 0:
            raise ResolutionError("grid does not reach the lower half-power edge; extend the grid")
        k = above[-1]
        f_low = _crossing(f, power, k, k + 1, level)
        fwhm = f_high - f_low
        center, peak = f[i], mag[i]
        if 0 < i < f.size - 1:
            # parabolic refinement of the sampled maximum
            y0, y1, y2 = mag[i - 1], mag[i], mag[i + 1]
            den = y0 - 2 * y1 + y2
            if den < 0:
                delta = 0.5 * (y0 - y2) / den
                center = f[i] + delta * (f[i + 1] - f[i])
                peak = y1 - 0.25 * (y0 - y2) * delta
    inside = np.count_nonzero((f >= f_low) & (f <= f_high))
    if lowpass:
        inside = 2 * inside - 1
    if inside < min_points:
        spacing = fwhm / min_points
        raise ResolutionError(
            f"passband under-resolved: {inside} points across FWHM={fwhm:.4g} Hz; "
            f"need grid spacing <= {spacing:.4g} Hz ({min_points} points per FWHM)"
        )
    q = center / fwhm
    return PassbandReport(float(center), float(fwhm), float(q), float(peak), float(f_low), float(f_high))


@functools.lru_cache(maxsize=256)
def _unit_passband(kind, n_pi):
    # passband of the tau = 1 s sequence, in units of xi
    seq = build_sequence(kind, 1.0, n_pi)
    if seq.kind is SequenceKind.RAMSEY:
        grid = xi_grid(1.0, 2.0, 4001)
    else:
        lo = 0.0 if n_pi < 4 else n_pi / 2 - 4
        grid = xi_grid(1.0, n_pi / 2 + 4, 4001, xi_min=lo)
    return passband_analysis(filter_numeric(seq, grid), min_points=32)


def sequence_passband(seq: PulseSequence) -> PassbandReport:
    """Passband of ``seq`` from a cached unit-duration analysis rescaled by 1/tau."""
    r = _unit_passband(seq.kind.value, seq.n_pi)
    s = 1.0 / seq.tau
    return PassbandReport(r.center * s, r.fwhm * s, r.q, r.peak * seq.tau, r.f_low * s, r.f_high * s)


def filter_magnitude(seq: PulseSequence, omega):
    """|Y(w)| from the closed forms; the fast path used by the sensitivity chain."""
    if seq.kind is SequenceKind.RAMSEY:
        return filter_analytic_ramsey(seq.tau, omega)
    return filter_analytic_echo_family(seq, omega)

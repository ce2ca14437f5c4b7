"""Monte Carlo 5-sigma thresholds with bootstrap confidence bands.

Each trial synthesizes one coherent segment at baseband: the axion
envelope from the renewal-phase wind model, scaled by the transduction
gain, plus electron-channel noise whose per-segment level already folds
in the incoherent-stacking rule. The matched-filter statistic is linear in
the injected coupling, so a trial is summarized by its unit-coupling
signal response ``a`` and noise projection ``z``: stat(g) = |g a + z|.

Random streams are Philox keyed by (seed, purpose) with the trial index in
the high counter word, so trial k sees the same numbers no matter how the
trials are split across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .detection import (DETECTION_SIGMA, NoiseModel, ProtocolLimits, SensitivityPoint,
                        _chain, effective_integration, five_sigma_threshold,
                        matched_filter_statistic)
from .errors import ConfigurationError, ConvergenceError
from .physics import HaloModel
from .transduction import SensorStack, hybrid_gain
from .wind import LabSite, WindDirection, wind_field_series

__all__ = ["MonteCarloResult", "trial_rng", "simulate_trials", "detection_probability",
           "bisect_threshold", "monte_carlo_limit"]

_STREAM_NOISE = 1
_STREAM_BOOT = 2
_STREAM_AXION = 3

# pole-aligned geometry: projection of the wind on the axis is identically 1
ALIGNED_SITE = LabSite(latitude=math.pi / 2)
ALIGNED_WIND = WindDirection(theta=0.0)


def trial_rng(seed, purpose, index):
    key = np.array([int(seed) & (2**64 - 1), purpose], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass
class MonteCarloResult:
    g50: float
    band: tuple
    response: np.ndarray  # a_k
    noise: np.ndarray  # z_k
    history: list = field(default_factory=list)


def _trial(k, seed, m_a, halo, isotope, gain, t_coh, n_samples, sigma, noise, site, wind):
    dt = t_coh / n_samples
    # annual phase pi/2 puts t = 0 at the mean wind speed
    env = wind_field_series(1.0, m_a, halo, site, wind, t_coh, dt, seed, isotope,
                            baseband=True, annual_phase=math.pi / 2, stream=_STREAM_AXION + 4 * k)
    template = gain * env.samples
    rng = trial_rng(seed, _STREAM_NOISE, k)
    nz = noise.synthesize(template.size, dt, rng, baseband=True)
    if sigma == 0:
        return math.inf, 0.0
    nz = nz * (sigma / noise.sample_sigma(dt, baseband=True))
    a = matched_filter_statistic(template, template, sigma)
    z = matched_filter_statistic(nz, template, sigma)
    return a, z


def simulate_trials(m_a, stack: SensorStack, protocol, halo: HaloModel, trials, seed,
                    noise: NoiseModel = None, limits=ProtocolLimits(), exponent=0.25,
                    n_samples=256, threads=1, site=ALIGNED_SITE, wind=ALIGNED_WIND):
    """Per-trial (a_k, z_k) arrays in trial order."""
    if noise is None:
        noise = NoiseModel.from_stack(stack)
    omega_a, tau_a, choice, s = _chain(m_a, stack, protocol, halo, limits)
    gain = s.f_ent * s.g_res * hybrid_gain(s, omega_a, choice.y_mag) * choice.electron_efficiency
    t_coh, n_seg = effective_integration(choice.coherence_e, tau_a, stack.t_obs)
    dt = t_coh / n_samples
    stack_gain = n_seg**exponent if n_seg > 1 else 1.0
    sigma = noise.sample_sigma(dt, baseband=True) / stack_gain
    args = (seed, m_a, halo, stack.isotope, gain, t_coh, n_samples, sigma, noise, site, wind)

    def run(chunk):
        return [_trial(k, *args) for k in chunk]

    chunks = np.array_split(np.arange(trials), max(1, int(threads)))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    out = np.array([r for part in parts for r in part], dtype=float).reshape(trials, 2)
    return out[:, 0], out[:, 1]


def detection_probability(g, a, z, threshold=DETECTION_SIGMA):
    """Fraction of trials with |g a + z| >= threshold; ``g`` may be an array."""
    g = np.asarray(g, dtype=float)
    stat = np.abs(g[..., None] * a + z)
    return (stat >= threshold).mean(axis=-1)


def bisect_threshold(a, z, rel_tol=1e-3, threshold=DETECTION_SIGMA, max_iter=200):
    """Coupling where the detection probability crosses 1/2 (geometric bisection).

    ``a`` and ``z`` may carry a leading batch axis; each row is solved
    independently. Returns (g50, history) where history lists (lo, hi) of
    the first row.
    """
    a = np.atleast_2d(a)
    z = np.atleast_2d(z)
    rows = a.shape[0]
    scale = threshold / np.median(a, axis=1)
    lo = scale.copy()
    hi = scale.copy()
    history = []
    for _ in range(max_iter):
        p = (np.abs(lo[:, None] * a + z) >= threshold).mean(axis=1)
        low_ok = p < 0.5
        if low_ok.all():
            break
        lo = np.where(low_ok, lo, lo / 2)
    for _ in range(max_iter):
        p = (np.abs(hi[:, None] * a + z) >= threshold).mean(axis=1)
        high_ok = p >= 0.5
        if high_ok.all():
            break
        hi = np.where(high_ok, hi, hi * 2)
    for _ in range(max_iter):
        history.append((float(lo[0]), float(hi[0])))
        if np.all(hi / lo - 1 <= rel_tol):
            return np.sqrt(lo * hi), history
        mid = np.sqrt(lo * hi)
        p = (np.abs(mid[:, None] * a + z) >= threshold).mean(axis=1)
        up = p >= 0.5
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    raise ConvergenceError(f"bisection did not reach rel_tol={rel_tol} in {max_iter} steps", history)


def monte_carlo_limit(m_a, stack: SensorStack, protocol, halo: HaloModel, trials=500, seed=0,
                      noise: NoiseModel = None, bootstrap=400, rel_tol=1e-3, threads=1,
                      limits=ProtocolLimits(), exponent=0.25, n_samples=256,
                      site=ALIGNED_SITE, wind=ALIGNED_WIND) -> SensitivityPoint:
    """Analytic 5-sigma point augmented with the Monte Carlo threshold and 95% band."""
    if trials < 100:
        raise ConfigurationError("monte_carlo_limit needs at least 100 trials")
    point = five_sigma_threshold(m_a, stack, protocol, halo, limits, exponent)
    a, z = simulate_trials(m_a, stack, protocol, halo, trials, seed, noise, limits, exponent,
                           n_samples, threads, site, wind)
    if np.all(np.isinf(a)):
        g50, band = 0.0, (0.0, 0.0)
        flags = point.flags + ("noiseless",)
    else:
        g50_arr, _ = bisect_threshold(a, z, rel_tol)
        g50 = float(g50_arr[0])
        rng = trial_rng(seed, _STREAM_BOOT, 0)
        idx = rng.integers(0, trials, size=(bootstrap, trials))
        boot, _ = bisect_threshold(a[idx], z[idx], rel_tol)
        lo, hi = np.percentile(np.sort(boot), [2.5, 97.5])
        band = (float(lo), float(hi))
        flags = point.flags
    return replace(point, mc_low=band[0], mc_high=band[1], mc_g50=g50, flags=flags)

"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names (``segment_transform``, ``renewal_carrier``) resolve to the
numba versions unless ``HYBRIDWIND_DISABLE_NUMBA`` is set. Both paths
evaluate every output element independently, so results do not depend on
the thread count.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit, prange

_CHUNK = 4096


# --- filter transform -----------------------------------------------------------


def segment_transform_numpy(omega, signs, mids, lengths):
    """Sum_j s_j L_j exp(i w m_j) sinc(w L_j / 2) for every w in ``omega``."""
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    out = np.empty(omega.shape[0], dtype=np.complex128)
    weights = signs * lengths
    for start in range(0, omega.shape[0], _CHUNK):
        w = omega[start:start + _CHUNK, None]
        x = 0.5 * w * lengths
        # np.sinc(z) = sin(pi z)/(pi z)
        phase = np.exp(1j * w * mids)
        out[start:start + _CHUNK] = (phase * (weights * np.sinc(x / np.pi))).sum(axis=1)
    return out


@njit(cache=True, parallel=True)
def _segment_transform_nb(omega, signs, mids, lengths):
    n = omega.shape[0]
    m = signs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in prange(n):
        w = omega[i]
        re = 0.0
        im = 0.0
        for j in range(m):
            x = 0.5 * w * lengths[j]
            if x == 0.0:
                s = 1.0
            else:
                s = np.sin(x) / x
            a = signs[j] * lengths[j] * s
            ph = w * mids[j]
            re += a * np.cos(ph)
            im += a * np.sin(ph)
        out[i] = re + 1j * im
    return out


def segment_transform_numba(omega, signs, mids, lengths):
    return _segment_transform_nb(
        np.ascontiguousarray(omega, dtype=np.float64),
        np.ascontiguousarray(signs, dtype=np.float64),
        np.ascontiguousarray(mids, dtype=np.float64),
        np.ascontiguousarray(lengths, dtype=np.float64),
    )


# --- renewal-phase carrier --------------------------------------------------------


def renewal_carrier_numpy(t0, dt, n, omega, epoch_starts, epoch_phases, baseband):
    """Unit carrier cos(w t + phi_k) (or exp(i phi_k) at baseband).

    ``epoch_starts`` is sorted with ``epoch_starts[0] <= t0``; sample i uses
    the phase of the last epoch starting at or before t0 + i*dt.
    """
    t = t0 + dt * np.arange(n, dtype=np.float64)
    k = np.searchsorted(epoch_starts, t, side="right") - 1
    phi = epoch_phases[k]
    if baseband:
        return np.exp(1j * phi)
    return np.cos(omega * t + phi)


@njit(cache=True, parallel=True)
def _renewal_real_nb(t0, dt, n, omega, epoch_starts, epoch_phases):
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        t = t0 + dt * i
        k = np.searchsorted(epoch_starts, t, side="right") - 1
        out[i] = np.cos(omega * t + epoch_phases[k])
    return out


@njit(cache=True, parallel=True)
def _renewal_base_nb(t0, dt, n, epoch_starts, epoch_phases):
    out = np.empty(n, dtype=np.complex128)
    for i in prange(n):
        t = t0 + dt * i
        k = np.searchsorted(epoch_starts, t, side="right") - 1
        out[i] = np.exp(1j * epoch_phases[k])
    return out


def renewal_carrier_numba(t0, dt, n, omega, epoch_starts, epoch_phases, baseband):
    starts = np.ascontiguousarray(epoch_starts, dtype=np.float64)
    phases = np.ascontiguousarray(epoch_phases, dtype=np.float64)
    if baseband:
        return _renewal_base_nb(float(t0), float(dt), int(n), starts, phases)
    return _renewal_real_nb(float(t0), float(dt), int(n), float(omega), starts, phases)


if HAVE_NUMBA:
    segment_transform = segment_transform_numba
    renewal_carrier = renewal_carrier_numba
    BACKEND = "numba"
else:
    segment_transform = segment_transform_numpy
    renewal_carrier = renewal_carrier_numpy
    BACKEND = "numpy"

"""Acceptance suite: one test per criterion, tolerances pinned.

Run with ``pytest -v tests/test_acceptance.py``; each test prints a one-line
summary of the measured quantity next to its bound.
"""
import math
import time

import numpy as np
import pytest

from hybridwind import detection as D
from hybridwind import filter as F
from hybridwind import physics as P
from hybridwind import transduction as T
from hybridwind import wind as W
from hybridwind.montecarlo import monte_carlo_limit, simulate_trials

# Independent constants oracle (CODATA 2018 values typed in, not imported)
HBAR_EV_S = 6.582119569e-16
C_M_S = 299792458.0


def report(n, ok, msg):
    print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {msg}")


@pytest.fixture(scope="module")
def reference_stack():
    return T.SensorStack.default("Bi209", n_spins=1e6, entanglement="ideal", q_factor=1e5,
                                 t_obs=365.25 * 86400.0)


@pytest.fixture(scope="module")
def halo():
    return P.HaloModel()


def _criterion1_sequences():
    return [F.build_sequence("ramsey", 1.0, 0), F.build_sequence("hahn", 1.0, 1),
            F.build_sequence("cpmg", 1.0, 4), F.build_sequence("cpmg", 1.0, 8),
            F.build_sequence("cpmg", 1.0, 16), F.build_sequence("xy8", 1.0, 8)]


def test_criterion_01_filter_oracle_equivalence():
    t0 = time.perf_counter()
    worst_rel, worst_zero = 0.0, 0.0
    for seq in _criterion1_sequences():
        n = max(seq.n_pi, 1)
        omega = F.xi_grid(seq.tau, 2 * n, 2048)
        num = F.filter_numeric(seq, omega).magnitude
        ana = F.filter_magnitude(seq, omega)
        # exact zeros of |Y| carry no relative information; there both sides
        # must vanish to round-off of the segment sum
        nz = num > 1e-12 * seq.tau
        worst_rel = max(worst_rel, float(np.max(np.abs(ana[nz] - num[nz]) / num[nz])))
        if np.any(~nz):
            worst_zero = max(worst_zero, float(np.max(np.abs(ana[~nz] - num[~nz]))) / seq.tau)
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 1e-9 and worst_zero <= 1e-14 and elapsed < 1.0
    report(1, ok, f"max rel err {worst_rel:.2e} (<1e-9), zero-point abs {worst_zero:.1e}*tau, "
                  f"{elapsed:.3f} s (<1 s)")
    assert worst_rel < 1e-9
    assert worst_zero <= 1e-14
    assert elapsed < 1.0


def _first_zero(seq, xi_max, points):
    omega = F.xi_grid(seq.tau, xi_max, points)
    mag = F.filter_numeric(seq, omega).magnitude
    xi = omega * seq.tau / (2 * math.pi)
    interior = np.nonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:]))[0] + 1
    return xi[interior[0]], xi[1] - xi[0]


def test_criterion_02_filter_landmarks():
    z_r, bin_r = _first_zero(F.build_sequence("ramsey", 1.0), 3.0, 601)
    z_h, bin_h = _first_zero(F.build_sequence("hahn", 1.0), 3.0, 601)
    pb8 = F.sequence_passband(F.build_sequence("cpmg", 1.0, 8))
    pb16 = F.sequence_passband(F.build_sequence("cpmg", 1.0, 16))
    ratio = pb16.center / pb8.center
    q_ok = all(0.5 * n <= pb.q <= 2.0 * n for n, pb in ((8, pb8), (16, pb16)))
    ok = abs(z_r - 1.0) <= bin_r and abs(z_h - 2.0) <= bin_h and abs(ratio - 2.0) <= 0.1 and q_ok
    report(2, ok, f"Ramsey zero xi={z_r:.4f}, Hahn zero xi={z_h:.4f} (bin {bin_r:.4f}); "
                  f"f_c(16)/f_c(8)={ratio:.4f} (2 +/- 5%); Q8={pb8.q:.2f}, Q16={pb16.q:.2f} (within 2x of N)")
    assert abs(z_r - 1.0) <= bin_r
    assert abs(z_h - 2.0) <= bin_h
    assert abs(ratio - 2.0) <= 0.05 * 2.0
    assert q_ok


def test_criterion_03_spinlock_sidebands():
    t0 = time.perf_counter()
    rabi, omega_a, beta = 2 * math.pi * 50e3, 2 * math.pi * 5e3, 0.1
    series = T.spin_lock_series(rabi, omega_a, beta * omega_a, 0.02, 1e-6)
    f, p = D.psd(series, window="hann")
    df = f[1] - f[0]
    peaks = {}
    for target in (45e3, 50e3, 55e3):
        sel = np.abs(f - target) <= 1.5 * df
        k = np.nonzero(sel)[0][np.argmax(p[sel])]
        peaks[target] = (f[k], p[k])
    located = all(abs(peaks[t][0] - t) <= df for t in peaks)
    lo, car, hi = peaks[45e3][1], peaks[50e3][1], peaks[55e3][1]
    sym = abs(lo - hi) / (0.5 * (lo + hi))
    ratio = 0.5 * (lo + hi) / car / (beta / 2) ** 2
    elapsed = time.perf_counter() - t0
    ok = located and sym < 0.01 and abs(ratio - 1) <= 0.05 and elapsed < 5
    report(3, ok, f"peaks at {[round(peaks[t][0]) for t in peaks]} Hz (bin {df:.0f} Hz), "
                  f"sideband asymmetry {sym:.1e} (<1%), (side/carrier)/(beta/2)^2={ratio:.4f} (1 +/- 5%), "
                  f"{elapsed:.2f} s")
    assert located
    assert sym < 0.01
    assert abs(ratio - 1) <= 0.05
    assert elapsed < 5


def test_criterion_04_sidereal_fingerprint():
    t0 = time.perf_counter()
    iso = P.lookup("Bi209")
    m_a = 1e-12
    equatorial_site = W.LabSite(latitude=0.0)
    equatorial_wind = W.WindDirection(theta=math.pi / 2)
    # coherent field (tau_a -> inf) isolates the kinematic modulation
    s1 = W.wind_field_series(1e-10, m_a, P.HaloModel(epsilon=0.0), equatorial_site, equatorial_wind,
                             4 * W.SIDEREAL_DAY, 300.0, 1, iso, baseband=True, tau_a=math.inf)
    spec1 = W.modulation_spectrum(s1, P.axion_angular_frequency(m_a))
    bin1 = spec1.omega[1]
    top = spec1.strongest(1)[0][0]
    ok1 = abs(top - W.OMEGA_SIDEREAL) <= bin1

    s2 = W.wind_field_series(1e-10, m_a, P.HaloModel(epsilon=0.1), equatorial_site, equatorial_wind,
                             4 * W.YEAR, 3600.0, 1, iso, baseband=True, tau_a=math.inf)
    spec2 = W.modulation_spectrum(s2, P.axion_angular_frequency(m_a), require=("sidereal", "annual"))
    centre = spec2.amplitude_at(W.OMEGA_SIDEREAL)
    r_lo = spec2.amplitude_at(W.OMEGA_SIDEREAL - W.OMEGA_YEAR) / centre
    r_hi = spec2.amplitude_at(W.OMEGA_SIDEREAL + W.OMEGA_YEAR) / centre
    ok2 = all(abs(r / 0.05 - 1) <= 0.10 for r in (r_lo, r_hi))
    elapsed = time.perf_counter() - t0
    report(4, ok1 and ok2 and elapsed < 30,
           f"dominant line {top:.4e} rad/s vs Omega_star {W.OMEGA_SIDEREAL:.4e} (bin {bin1:.1e}); "
           f"sideband ratios {r_lo:.4f}, {r_hi:.4f} (0.05 +/- 10%); {elapsed:.2f} s (<30 s)")
    assert ok1
    assert ok2
    assert elapsed < 30


def test_criterion_05_snr_ratio_identity():
    rng = np.random.default_rng(20240505)
    worst = 0.0
    for _ in range(1000):
        iso = P.lookup(rng.choice(["Bi209", "P31"]))
        kind = rng.choice(["ramsey", "hahn", "cpmg"])
        tau = 10 ** rng.uniform(-4, 0)
        n = {"ramsey": 0, "hahn": 1}.get(kind, int(rng.integers(1, 64)))
        seq = F.build_sequence(kind, tau, n)
        stack = T.SensorStack(iso, seq, g_drv=10 ** rng.uniform(-1, 1), kappa=rng.uniform(0.5, 1.5),
                              eta_e=10 ** rng.uniform(-17, -13), eta_n=10 ** rng.uniform(-14, -10),
                              t2_e=10 ** rng.uniform(-4, 1), t2_n=10 ** rng.uniform(-2, 2))
        omega = 10 ** rng.uniform(0, 6)
        b_a = 10 ** rng.uniform(-25, -15)
        t_e, t_n = stack.coherence_e, stack.coherence_n
        literal = D.snr_ratio(stack, omega, t_e, t_n)
        y = F.filter_magnitude(seq, omega)
        g_hyb = (iso.hyperfine * iso.spin / P.CONSTANTS.gamma_e) * abs(iso.gamma_n) * y \
            * stack.g_drv * stack.kappa
        snr_e = D.channel_snr(g_hyb * b_a, stack.eta_e, t_e, 1).per_segment
        snr_n = D.channel_snr(b_a, stack.eta_n, t_n, 1, channel="nuclear").per_segment
        if snr_n == 0 or y == 0:
            continue
        worst = max(worst, abs(literal - snr_e / snr_n) / (snr_e / snr_n))
    report(5, worst < 1e-12, f"max rel deviation {worst:.2e} over 1000 stacks (<1e-12)")
    assert worst < 1e-12


def test_criterion_06_axion_timescales():
    halo = P.HaloModel(v0=220e3)
    tau = P.axion_coherence_time(1e-12, halo)
    beta = 220e3 / C_M_S
    oracle = 2 * math.pi * HBAR_EV_S / (1e-12 * beta**2)
    rel = abs(tau - oracle) / oracle
    masses = np.logspace(-16, -6, 41)
    prod = np.array([P.axion_coherence_time(m, halo) * P.axion_angular_frequency(m) for m in masses])
    spread = float(np.max(np.abs(prod / prod[0] - 1)))
    ok = rel < 1e-3 and spread < 1e-12
    report(6, ok, f"tau_a(1e-12 eV)={tau:.6f} s vs oracle {oracle:.6f} s (rel {rel:.1e}, <0.1%); "
                  f"tau_a*omega_a spread {spread:.1e} over 10 decades (<1e-12)")
    assert rel < 1e-3
    assert spread < 1e-12


def test_criterion_07_scaling_ladder(reference_stack, halo):
    m_a = 1e-13
    omega = P.axion_angular_frequency(m_a)
    tau_a = P.axion_coherence_time(m_a, halo)
    seq = F.build_sequence("cpmg", 0.01, 8)
    base_stack = reference_stack.replace(sequence=seq)
    y = F.filter_magnitude(seq, omega)
    bpg = P.field_per_coupling(halo, base_stack.isotope)

    def g5(stack=base_stack, y_mag=y):
        return D.analytic_g5(stack, omega, tau_a, y_mag, bpg)

    g0 = g5()
    iso2a = base_stack.isotope.with_overrides(hyperfine=2 * base_stack.isotope.hyperfine)
    checks = {
        "F_ent": g5(base_stack.replace(n_spins=4 * base_stack.n_spins, entanglement="sql")) * 2
        / g5(base_stack.replace(entanglement="sql")),
        "G_res": g5(base_stack.replace(q_factor=4 * base_stack.q_factor)) * 2 / g0,
        "A": g5(base_stack.replace(isotope=iso2a)) * 2 / g0,
        "Y_N": g5(y_mag=2 * y) * 2 / g0,
        "eta_e": g5(base_stack.replace(eta_e=2 * base_stack.eta_e)) / (2 * g0),
    }
    worst = max(abs(v - 1) for v in checks.values())
    n6 = reference_stack.replace(sequence=seq, n_spins=1e6)
    gain = g5(n6.replace(entanglement="sql")) / g5(n6.replace(entanglement="ideal"))
    ok = worst < 1e-12 and abs(gain / 1e3 - 1) < 1e-12
    report(7, ok, f"worst factor-2 deviation {worst:.1e} (<1e-12) over {sorted(checks)}; "
                  f"SQL->ideal at N=1e6 improves g5 by {gain!r}")
    assert worst < 1e-12
    assert abs(gain / 1e3 - 1) < 1e-12


def test_criterion_08_envelope_order_of_magnitude(reference_stack, halo):
    t0 = time.perf_counter()
    masses = np.logspace(-16, -6, 201)
    curves = D.sensitivity_scan(masses, D.ALL_PROTOCOLS, reference_stack, halo)
    env = curves["envelope"]
    inband = [p for p in env.points if p.in_band]
    best = min(inband, key=lambda p: p.g5)
    ratios = np.array([p.g5_nuclear / p.g5 for p in inband])
    elapsed = time.perf_counter() - t0
    ok = best.g5 <= 1e-24 and ratios.min() >= 10 and elapsed < 60
    report(8, ok, f"envelope minimum g5={best.g5:.3e} GeV^-1 at {best.m_a:.2e} eV ({best.protocol}); "
                  f"hybrid/nuclear advantage >= {ratios.min():.2e} over {len(inband)} in-band masses "
                  f"({inband[0].m_a:.1e}-{inband[-1].m_a:.1e} eV); {elapsed:.2f} s")
    assert best.g5 <= 1e-24
    assert ratios.min() >= 10
    assert elapsed < 60


def test_criterion_09_monte_carlo_consistency(reference_stack, halo):
    t0 = time.perf_counter()
    masses = (1e-15, 1e-13, 1e-11)
    env = D.sensitivity_scan(np.array(masses), D.ALL_PROTOCOLS, reference_stack, halo)["envelope"]
    cover = {}
    for pt in env.points:
        hits = 0
        for seed in range(20):
            r = monte_carlo_limit(pt.m_a, reference_stack, pt.protocol, halo, trials=500, seed=seed)
            hits += r.mc_low <= r.g5 <= r.mc_high
        cover[(pt.m_a, pt.protocol)] = hits
    a1, z1 = simulate_trials(1e-13, reference_stack, env.points[1].protocol, halo, 500, 7, threads=1)
    a4, z4 = simulate_trials(1e-13, reference_stack, env.points[1].protocol, halo, 500, 7, threads=4)
    identical = a1.tobytes() == a4.tobytes() and z1.tobytes() == z4.tobytes()
    elapsed = time.perf_counter() - t0
    ok = all(h >= 18 for h in cover.values()) and identical and elapsed < 300
    report(9, ok, f"coverage per (mass, protocol) {cover} (>=18/20); "
                  f"threads 1 vs 4 identical={identical}; {elapsed:.1f} s (<300 s)")
    assert all(h >= 18 for h in cover.values())
    assert identical
    assert elapsed < 300


def test_criterion_10_isotope_ratio():
    bi, p = P.lookup("Bi209"), P.lookup("P31")
    assert bi.hyperfine / (2 * math.pi) == pytest.approx(1.475e9, rel=1e-15)
    assert p.hyperfine / (2 * math.pi) == pytest.approx(117e6, rel=1e-15)
    seq = F.build_sequence("cpmg", 1e-3, 8)
    omega = 2 * math.pi * 4e3
    g_bi = T.hybrid_gain(T.SensorStack(bi, seq), omega)
    g_p = T.hybrid_gain(T.SensorStack(p, seq), omega)
    expected = (1.475e9 * 4.5 * 6.96304e6) / (117e6 * 0.5 * 17.235e6)
    rel = abs(g_bi / g_p - expected) / expected
    report(10, rel < 1e-12, f"G_hyb(Bi)/G_hyb(P)={g_bi / g_p!r} vs A*I*gamma ratio {expected!r} "
                            f"(rel {rel:.1e}, <1e-12)")
    assert rel < 1e-12

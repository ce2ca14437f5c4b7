"""Command-line front end.

Every run resolves a configuration (defaults < ``--config`` file < ``--set``
overrides < explicit flags), writes the requested tables into ``--out-dir``
and finishes with ``manifest.json`` echoing the resolved configuration.
Progress goes to stderr; stdout only carries a table when ``--stdout`` is
given.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__, _accel, _kernels
from .config import ConfigurationError, RunConfig, resolve_config
from .detection import (NoiseModel, Protocol, ProtocolLimits, psd, sensitivity_scan)
from .errors import HybridWindError
from .filter import SequenceKind, build_sequence, electron_filter, filter_numeric, xi_grid
from .montecarlo import monte_carlo_limit
from .physics import (HaloModel, axion_angular_frequency, default_halo, field_per_coupling,
                      lookup)
from .transduction import SensorStack, demodulated_phase, spin_lock_series
from .wind import LabSite, WindDirection, modulation_spectrum, wind_field_series

log = logging.getLogger("hybridwind")

CURVE_COLUMNS = ["m_a_eV", "omega_a_rad_s", "protocol", "tau_s", "n_pi", "g5_GeVinv", "g_an",
                 "mc_low", "mc_high", "flags", "g5_nuclear_GeVinv", "mc_g50"]


# --- formatting ---------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (tuple, list)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return v


class Table:
    def __init__(self, name, columns, rows, header=()):
        self.name = name
        self.columns = list(columns)
        self.rows = rows
        self.header = list(header)  # "key=value" comment lines

    def to_csv(self):
        buf = io.StringIO()
        for line in self.header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def to_json(self, cfg: RunConfig):
        doc = {
            "name": self.name,
            "version": __version__,
            "header": self.header,
            "config": _json_value(cfg.values),
            "columns": self.columns,
            "rows": [[_json_value(v) for v in r] for r in self.rows],
        }
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def _write(cfg: RunConfig, tables, stdout=False):
    os.makedirs(cfg.out_dir, exist_ok=True)
    written = []
    for t in tables:
        ext = cfg.format
        path = os.path.join(cfg.out_dir, f"{t.name}.{ext}")
        text = t.to_csv() if ext == "csv" else t.to_json(cfg)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        written.append(os.path.basename(path))
        log.info("wrote %s (%d rows)", path, len(t.rows))
    if stdout and tables:
        sys.stdout.write(tables[0].to_csv())
    return written


def write_manifest(cfg: RunConfig, outputs):
    doc = {
        "artifact": "hybridwind",
        "version": __version__,
        "subcommand": cfg.subcommand,
        "config_file": cfg.config_path,
        "overrides": cfg.overrides,
        "backend": _kernels.BACKEND,
        "config": _json_value(cfg.values),
        "outputs": outputs,
    }
    path = os.path.join(cfg.out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return path


# --- model construction -------------------------------------------------------


def build_halo(cfg: RunConfig) -> HaloModel:
    h = cfg["halo"]
    return replace(default_halo(cfg["isotope"]["table"] or None),
                   rho_dm=h["rho_dm"], v0=h["v0"] * 1e3, epsilon=h["epsilon"])


def build_isotope(cfg: RunConfig):
    c = cfg["isotope"]
    iso = lookup(c["name"], c["table"] or None)
    kw = {k: c[k] for k in ("t2_nuclear", "t2_electron") if c[k] is not None}
    return iso.with_overrides(**kw) if kw else iso


def build_stack(cfg: RunConfig) -> SensorStack:
    s, n = cfg["stack"], cfg["noise"]
    iso = build_isotope(cfg)
    probe = s["electron_probe"].lower()
    if probe in ("none", ""):
        probe_seq = None
    elif probe in ("ramsey", "hahn"):
        probe_seq = build_sequence(probe, s["electron_tau"])
    else:
        raise ConfigurationError(f"stack.electron_probe must be none, ramsey or hahn, got {probe!r}")
    return SensorStack(
        isotope=iso, sequence=build_sequence("ramsey", iso.t2_nuclear, 0),
        g_drv=s["g_drv"], kappa=s["kappa"], n_spins=s["n_spins"], entanglement=s["entanglement"],
        q_factor=s["q_factor"], q_ref=s["q_ref"], res_exponent=s["res_exponent"],
        eta_e=n["eta_e"], eta_n=n["eta_n"], t_obs=s["t_obs"], electron_probe=probe_seq,
        t1rho_e=s["t1rho_e"], rabi=2 * math.pi * s["rabi_khz"] * 1e3,
    )


def build_noise(cfg: RunConfig) -> NoiseModel:
    n = cfg["noise"]
    return NoiseModel(eta_e=n["eta_e"], eta_n=n["eta_n"], corner_hz=n["corner_hz"],
                      exponent=n["exponent"], readout_variance=n["readout_variance"], seed=cfg.seed)


def build_limits(cfg: RunConfig) -> ProtocolLimits:
    return ProtocolLimits(cfg["limits"]["min_spacing"], cfg["limits"]["max_pulses"])


def mass_grid(lo, hi, per_decade):
    if not (0 < lo <= hi):
        raise ConfigurationError("scan.mass_min_ev must be positive and <= scan.mass_max_ev")
    if not per_decade > 0:
        raise ConfigurationError("scan.points_per_decade must be positive")
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), max(n, 1))


def _sub_seed(master, *key):
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1, np.uint64)[0])


# --- subcommands --------------------------------------------------------------


def run_isotope(cfg: RunConfig):
    iso = build_isotope(cfg)
    halo = build_halo(cfg)
    cols = ["name", "spin", "gamma_n_rad_s_T", "gamma_n_hz_T", "hyperfine_rad_s", "hyperfine_hz",
            "t2_nuclear_s", "t2_electron_s", "b_a0_per_g_T_GeV"]
    row = [iso.name, iso.spin, iso.gamma_n, iso.gamma_n / (2 * math.pi), iso.hyperfine,
           iso.hyperfine / (2 * math.pi), iso.t2_nuclear, iso.t2_electron,
           field_per_coupling(halo, iso)]
    return [Table(f"isotope_{iso.name}", cols, [row])]


def run_filter(cfg: RunConfig):
    c = cfg["filter"]
    kind = SequenceKind.parse(c["kind"])
    n_pi = c["n_pi"] if kind in (SequenceKind.CPMG, SequenceKind.XY8) else None
    seq = build_sequence(kind, c["tau"], n_pi)
    if c["points"] < 2:
        raise ConfigurationError("filter.points must be >= 2")
    omega = xi_grid(seq.tau, c["grid_max_xi"], c["points"])
    y = filter_numeric(seq, omega)
    e_tau = c["electron_tau"] if c["electron_tau"] is not None else seq.tau
    probe = build_sequence(c["electron_kind"], e_tau)
    fe = electron_filter(probe, omega)
    xi = omega * seq.tau / (2 * math.pi)
    rows = [[x, a / seq.tau, (b / e_tau) ** 2] for x, a, b in zip(xi, y.magnitude, fe.magnitude)]
    header = [f"sequence={kind.value}", f"tau_s={seq.tau!r}", f"n_pi={seq.n_pi}",
              f"electron_sequence={probe.kind.value}", f"electron_tau_s={e_tau!r}"]
    log.info("filter %s on %d points", seq.describe(), len(rows))
    return [Table(f"filter_{kind.value}_n{seq.n_pi}", ["xi", "Y_over_tau", "F2_over_tau2"], rows, header)]


def run_wind(cfg: RunConfig):
    w, s = cfg["wind"], cfg["site"]
    iso, halo = build_isotope(cfg), build_halo(cfg)
    site = LabSite(math.radians(s["latitude_deg"]), math.radians(s["tilt_deg"]),
                   math.radians(s["azimuth_deg"]))
    direction = WindDirection.from_equatorial(math.radians(w["declination_deg"]),
                                              math.radians(w["right_ascension_deg"]))
    duration = w["days"] * 86400.0
    series = wind_field_series(w["g_ann"], w["mass_ev"], halo, site, direction, duration, w["dt"],
                               cfg.seed, iso, baseband=w["baseband"],
                               annual_phase=cfg["halo"]["annual_phase"])
    omega_a = axion_angular_frequency(w["mass_ev"])
    t = series.times
    if np.iscomplexobj(series.samples):
        ts = Table("wind_series", ["t_s", "value_re", "value_im"],
                   [[a, b.real, b.imag] for a, b in zip(t, series.samples)], [f"label={series.label}"])
    else:
        ts = Table("wind_series", ["t_s", "value"], list(zip(t, series.samples)),
                   [f"label={series.label}"])
    spec = modulation_spectrum(series, omega_a, window=w["window"])
    f = spec.omega / (2 * math.pi)
    sp = Table("wind_spectrum", ["f_hz", "amplitude"], list(zip(f, spec.amplitude)),
               [f"sidereal_resolvable={int(spec.resolvable['sidereal'])}",
                f"annual_resolvable={int(spec.resolvable['annual'])}"])
    log.info("wind series: %d samples over %.6g s", len(t), series.duration)
    return [ts, sp]


def run_spinlock(cfg: RunConfig):
    c = cfg["spinlock"]
    rabi = 2 * math.pi * c["rabi_khz"] * 1e3
    omega_a = 2 * math.pi * c["axion_khz"] * 1e3
    series = spin_lock_series(rabi, omega_a, c["beta"] * omega_a, c["duration"], c["dt"])
    phase = demodulated_phase(series, rabi)
    f, p = psd(series, window="hann")
    header = [f"rabi_hz={c['rabi_khz'] * 1e3!r}", f"axion_hz={c['axion_khz'] * 1e3!r}",
              f"beta={c['beta']!r}"]
    return [Table("spinlock_series", ["t_s", "Sx", "phase_rad"],
                  list(zip(series.times, series.samples, phase)), header),
            Table("spinlock_psd", ["f_hz", "psd_per_hz"], list(zip(f, p)), header)]


def _curve_rows(curve):
    return [[p.m_a, p.omega_a, p.protocol, p.tau, p.n_pi, p.g5, p.g_an, p.mc_low, p.mc_high,
             p.flags, p.g5_nuclear, p.mc_g50] for p in curve.points]


def _sensitivity(cfg: RunConfig, masses, names):
    stack, halo, limits = build_stack(cfg), build_halo(cfg), build_limits(cfg)
    protocols = [Protocol.parse(p) for p in cfg["scan"]["protocols"]]
    exponent = cfg["noise"]["stacking_exponent"]
    log.info("analytic scan: %d masses x %d protocols", len(masses), len(protocols))
    curves = sensitivity_scan(masses, protocols, stack, halo, limits, exponent)
    mc = cfg["mc"]
    if mc["trials"] > 0:
        noise = build_noise(cfg)
        for j, p in enumerate(protocols):
            pts = curves[p.value].points
            for i, pt in enumerate(pts):
                if not pt.in_band:
                    continue
                log.info("monte carlo %s m_a=%r eV (%d trials)", p.value, pt.m_a, mc["trials"])
                pts[i] = monte_carlo_limit(pt.m_a, stack, p, halo, trials=mc["trials"],
                                           seed=_sub_seed(cfg.seed, i, j), noise=noise,
                                           bootstrap=mc["bootstrap"], rel_tol=mc["rel_tol"],
                                           threads=cfg.threads, limits=limits, exponent=exponent,
                                           n_samples=mc["n_samples"])
        env = curves["envelope"].points
        for i, pt in enumerate(env):
            if pt.protocol in curves:
                env[i] = curves[pt.protocol].points[i]
    tables = [Table(names(key), CURVE_COLUMNS, _curve_rows(c)) for key, c in curves.items()]
    return tables


def run_sensitivity(cfg: RunConfig):
    return _sensitivity(cfg, np.array([cfg["scan"]["mass_ev"]]), lambda k: f"sensitivity_{k}")


def run_scan(cfg: RunConfig):
    s = cfg["scan"]
    masses = mass_grid(s["mass_min_ev"], s["mass_max_ev"], s["points_per_decade"])
    return _sensitivity(cfg, masses, lambda k: f"curve_{k}")


SUBCOMMANDS = {
    "isotope": run_isotope,
    "filter": run_filter,
    "wind": run_wind,
    "spinlock": run_spinlock,
    "sensitivity": run_sensitivity,
    "scan": run_scan,
}

# flag -> config key, per subcommand
FLAGS = {
    "isotope": [("--name", "isotope.name", str)],
    "filter": [("--kind", "filter.kind", str), ("--tau", "filter.tau", float),
               ("--n-pi", "filter.n_pi", int), ("--grid-max-xi", "filter.grid_max_xi", float),
               ("--points", "filter.points", int)],
    "wind": [("--mass-ev", "wind.mass_ev", float), ("--days", "wind.days", float),
             ("--dt", "wind.dt", float)],
    "spinlock": [("--rabi-khz", "spinlock.rabi_khz", float), ("--axion-khz", "spinlock.axion_khz", float),
                 ("--beta", "spinlock.beta", float), ("--duration", "spinlock.duration", float),
                 ("--dt", "spinlock.dt", float)],
    "sensitivity": [("--mass-ev", "scan.mass_ev", float), ("--mc-trials", "mc.trials", int)],
    "scan": [("--mass-min-ev", "scan.mass_min_ev", float), ("--mass-max-ev", "scan.mass_max_ev", float),
             ("--points-per-decade", "scan.points_per_decade", float), ("--mc-trials", "mc.trials", int)],
}


def _dest(key):
    return "opt_" + key.replace(".", "__")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed (run.seed)")
    common.add_argument("--out-dir", default=".", help="output directory (default: .)")
    common.add_argument("--threads", type=int, help="parallelism cap (run.threads)")
    common.add_argument("--format", choices=("csv", "json"), help="table format (run.format)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration key; repeatable")
    common.add_argument("--stdout", action="store_true", help="also print the first table as CSV")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    parser = argparse.ArgumentParser(prog="hybridwind", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        for flag, key, typ in FLAGS[name]:
            p.add_argument(flag, dest=_dest(key), type=typ, help=f"sets {key}")
    return parser


def config_from_args(args) -> RunConfig:
    overrides = list(args.set)
    for flag, key, _ in FLAGS[args.subcommand]:
        v = getattr(args, _dest(key))
        if v is not None:
            overrides.append(f"{key}={v!r}" if isinstance(v, float) else f"{key}={v}")
    for attr, key in (("seed", "run.seed"), ("threads", "run.threads"), ("format", "run.format")):
        v = getattr(args, attr)
        if v is not None:
            overrides.append(f"{key}={v}")
    return resolve_config(args.config, overrides, args.subcommand, args.out_dir)


def execute(cfg: RunConfig, stdout=False):
    """Run one resolved configuration; returns the list of files written."""
    _accel.set_threads(cfg.threads)
    tables = SUBCOMMANDS[cfg.subcommand](cfg)
    outputs = _write(cfg, tables, stdout)
    write_manifest(cfg, outputs)
    return outputs


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        execute(cfg, args.stdout)
    except ConfigurationError as exc:
        print(f"hybridwind {args.subcommand}: configuration error: {exc}", file=sys.stderr)
        return 2
    except (HybridWindError, ValueError, ArithmeticError, OSError) as exc:
        print(f"hybridwind {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

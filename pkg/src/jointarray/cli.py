"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 when the scenario is
infeasible or degenerate. Diagnostics go to stderr; data to stdout or
``--out``.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .crb import UnidentifiableError, crb_closed_form, crb_general, snr_to_sigma2
from .diophantine import equal_variance_search
from .estimator import MleConfig
from .experiments import ConfigError, ScenarioConfig, preset, run_sweep
from .geometry import (BudgetExceededError, GeometryError, SensorArray,
                       beamforming_condition, clustered_array, corollary_aperture,
                       is_contiguous, is_nonredundant, optimal_tx_array,
                       spatial_variance, sum_coarray)
from .signal import DimensionError, optimal_waveform, orthogonal_waveform

EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class UsageError(Exception):
    pass


class InfeasibleError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _array(text):
    try:
        return SensorArray.parse(text)
    except GeometryError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _yesno(flag):
    return "true" if flag else "false"


def _fmt(x):
    return repr(float(x))


def read_waveform_file(path) -> np.ndarray:
    """Read a waveform: first line ``T,Nt``, then ``T*Nt`` lines ``real,imag``
    in row-major order."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise UsageError(f"waveform file {path} is empty")
    try:
        t, nt = (int(v) for v in lines[0].split(","))
        vals = [complex(float(re), float(im))
                for re, im in (ln.split(",") for ln in lines[1:])]
    except ValueError as exc:
        raise UsageError(f"malformed waveform file {path}: {exc}") from exc
    if len(vals) != t * nt:
        raise UsageError(
            f"waveform file {path} declares {t}x{nt} but has {len(vals)} entries")
    return np.array(vals, dtype=complex).reshape(t, nt)


def _waveform_spec(spec):
    if spec in ("optimal", "orthogonal"):
        return spec
    if spec.startswith("file:"):
        return read_waveform_file(spec[5:])
    raise UsageError(f"waveform must be optimal, orthogonal or file:PATH, got {spec!r}")


def _waveform_matrix(spec, tx, omega, t_samples):
    if isinstance(spec, str):
        if spec == "optimal":
            return optimal_waveform(tx, omega, t_samples)
        return orthogonal_waveform(len(tx), t_samples)
    return spec


def _snr_grid(lo, hi, step):
    if step <= 0:
        raise UsageError("--snr-step must be positive")
    if hi < lo:
        raise UsageError("--snr-max must be >= --snr-min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + k * step, 10) for k in range(n))


def cmd_design(args, out):
    if args.nr < 2 or args.nr % 2:
        raise UsageError(
            f"--nr must be even and >= 2 (the clustered receive array is only "
            f"defined for an even number of sensors), got {args.nr}")
    if args.nt < 1:
        raise UsageError(f"--nt must be positive, got {args.nt}")
    aperture = args.aperture if args.aperture is not None else corollary_aperture(args.nt, args.nr)
    if aperture < 1 or args.nr > aperture + 1:
        raise InfeasibleError(f"{args.nr} receive sensors do not fit in aperture {aperture}")
    rx = clustered_array(args.nr, aperture)
    tx = optimal_tx_array(args.nt, args.nr)
    co = sum_coarray(tx, rx)
    cond = beamforming_condition(tx, rx)
    print(f"nt={args.nt} nr={args.nr} aperture={aperture}", file=out)
    print(f"rx: {rx}", file=out)
    print(f"tx: {tx}", file=out)
    print(f"chi_rx: {spatial_variance(rx)}", file=out)
    print(f"chi_tx: {spatial_variance(tx)}", file=out)
    print(f"beamforming_condition: {_yesno(cond)}", file=out)
    print(f"coarray_size: {len(co)}", file=out)
    print(f"contiguous: {_yesno(is_contiguous(co))}", file=out)
    print(f"nonredundant: {_yesno(is_nonredundant(co, len(tx), len(rx)))}", file=out)
    print("crb_unit_snr: " + _fmt(crb_closed_form(len(tx), len(rx), spatial_variance(rx)).value),
          file=out)
    if not cond:
        raise InfeasibleError("chi_rx > chi_tx fails; transmit beamforming is not optimal")


def cmd_analyze(args, out):
    tx, rx = args.tx, args.rx
    co = sum_coarray(tx, rx)
    print(f"tx: {tx}", file=out)
    print(f"rx: {rx}", file=out)
    print(f"chi_tx: {spatial_variance(tx)}", file=out)
    print(f"chi_rx: {spatial_variance(rx)}", file=out)
    print(f"beamforming_condition: {_yesno(beamforming_condition(tx, rx))}", file=out)
    print(f"coarray_size: {len(co)}", file=out)
    print(f"contiguous: {_yesno(is_contiguous(co))}", file=out)
    print(f"nonredundant: {_yesno(is_nonredundant(co, len(tx), len(rx)))}", file=out)
    print("coarray:", file=out)
    print(co.to_text(), file=out)


def cmd_crb(args, out):
    spec = _waveform_spec(args.waveform)
    s = _waveform_matrix(spec, args.tx, args.omega, args.t_samples)
    closed = isinstance(spec, str) and spec == "optimal"
    if closed and not beamforming_condition(args.tx, args.rx):
        raise InfeasibleError(
            "optimal waveform requires chi_rx > chi_tx; use --waveform orthogonal or file:PATH")
    gamma = complex(args.gamma)
    chi = spatial_variance(args.rx)
    print("snr_db,sigma2,crb,crb_closed_form", file=out)
    for snr in _snr_grid(args.snr_min, args.snr_max, args.snr_step):
        sigma2 = snr_to_sigma2(snr, gamma)
        general = crb_general(args.tx, args.rx, s, args.omega, gamma, sigma2).value
        cf = (_fmt(crb_closed_form(len(args.tx), len(args.rx), chi, gamma, sigma2).value)
              if closed else "")
        print(f"{_fmt(snr)},{_fmt(sigma2)},{_fmt(general)},{cf}", file=out)


def cmd_search(args, out):
    if args.n < 2 or args.l_max < 1:
        raise UsageError("--n must be >= 2 and --l-max >= 1")
    classes = equal_variance_search(args.n, args.l_max, args.budget)
    for cls in classes:
        print(cls.to_text(), file=out)


# simulate: key=value config file keys mirror the long flag names
SIM_KEYS = ("preset", "tx", "rx", "waveform", "omega", "gamma", "snr", "snr_min",
            "snr_max", "snr_step", "trials", "grid_points", "refinement",
            "search_interval", "seed", "t_samples", "workers", "out")


def read_config_file(path) -> dict[str, str]:
    conf = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SIM_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        conf[key] = value
    return conf


def _merged_sim_options(args):
    conf = read_config_file(args.config) if args.config else {}
    for key in SIM_KEYS:
        val = getattr(args, key)
        if val is not None:
            conf[key] = val
    return conf


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def build_scenario(opts) -> ScenarioConfig:
    try:
        kw = {}
        if "omega" in opts:
            kw["omega"] = float(opts["omega"])
        if "gamma" in opts:
            kw["gamma"] = complex(str(opts["gamma"]).replace(" ", ""))
        if "trials" in opts:
            kw["trials"] = int(opts["trials"])
        if "seed" in opts:
            kw["master_seed"] = int(opts["seed"])
        if "t_samples" in opts:
            kw["t_samples"] = int(opts["t_samples"])
        if "snr" in opts:
            kw["snr_grid_db"] = _floats(opts["snr"])
        elif any(k in opts for k in ("snr_min", "snr_max", "snr_step")):
            kw["snr_grid_db"] = _snr_grid(float(opts.get("snr_min", -20)),
                                          float(opts.get("snr_max", 20)),
                                          float(opts.get("snr_step", 2)))
        mle_kw = {}
        if "grid_points" in opts:
            mle_kw["grid_points"] = int(opts["grid_points"])
        if "refinement" in opts:
            mle_kw["refinement"] = str(opts["refinement"])
        if "search_interval" in opts:
            lo, hi = _floats(opts["search_interval"])
            mle_kw["search_interval"] = (lo, hi)
        if mle_kw:
            kw["mle"] = MleConfig(**mle_kw)
        if "waveform" in opts:
            kw["waveform"] = _waveform_spec(str(opts["waveform"]))
        for key in ("tx", "rx"):
            if key in opts:
                val = opts[key]
                kw[key] = val if isinstance(val, SensorArray) else SensorArray.parse(str(val))
    except (ValueError, GeometryError) as exc:
        raise UsageError(str(exc)) from exc

    if "preset" in opts:
        return preset(str(opts["preset"]), **kw)
    if "tx" not in kw or "rx" not in kw:
        raise UsageError("simulate needs --preset or both --tx and --rx")
    return ScenarioConfig(**kw)


def cmd_simulate(args, out):
    opts = _merged_sim_options(args)
    cfg = build_scenario(opts)
    workers = int(opts.get("workers", 1))
    result = run_sweep(cfg, workers=workers)
    dest = opts.get("out")
    if dest:
        meta = result.write(dest)
        print(f"wrote {dest} and {meta}", file=sys.stderr)
    else:
        out.write(result.to_csv())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jointarray", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("design", help="CRB-optimal Tx/Rx pair for given sensor counts")
    d.add_argument("--nt", type=int, required=True)
    d.add_argument("--nr", type=int, required=True)
    d.add_argument("--aperture", type=int,
                   help="receive aperture (default (nt+1)*nr/2-1)")
    d.set_defaults(func=cmd_design)

    a = sub.add_parser("analyze", help="spatial variances and sum co-array of a pair")
    a.add_argument("--tx", type=_array, required=True)
    a.add_argument("--rx", type=_array, required=True)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("crb", help="CRB versus SNR as CSV")
    c.add_argument("--tx", type=_array, required=True)
    c.add_argument("--rx", type=_array, required=True)
    c.add_argument("--waveform", default="optimal",
                   help="optimal, orthogonal or file:PATH")
    c.add_argument("--snr-min", type=float, default=-20.0)
    c.add_argument("--snr-max", type=float, default=20.0)
    c.add_argument("--snr-step", type=float, default=2.0)
    c.add_argument("--omega", type=float, default=0.0)
    c.add_argument("--gamma", type=complex, default=1.0)
    c.add_argument("--t-samples", type=int)
    c.set_defaults(func=cmd_crb)

    s = sub.add_parser("simulate", help="Monte Carlo MLE sweep written as CSV")
    s.add_argument("--config", help="key=value file; flags override its entries")
    s.add_argument("--preset", choices=["fig3a", "fig3b", "fig3c", "fig3d"])
    s.add_argument("--tx", type=_array)
    s.add_argument("--rx", type=_array)
    s.add_argument("--waveform")
    s.add_argument("--omega", type=float)
    s.add_argument("--gamma")
    s.add_argument("--snr", help="comma-separated SNR list in dB")
    s.add_argument("--snr-min", type=float)
    s.add_argument("--snr-max", type=float)
    s.add_argument("--snr-step", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--grid-points", type=int)
    s.add_argument("--refinement", choices=["none", "parabolic"])
    s.add_argument("--search-interval", help="lo,hi in radians within [-pi, pi); write --search-interval=-0.78,0.78")
    s.add_argument("--seed", type=int)
    s.add_argument("--t-samples", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", help="CSV path; a .meta sidecar is written next to it")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("search-equal-variance",
                       help="receive arrays sharing an exact spatial variance")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--l-max", type=int, required=True)
    e.add_argument("--budget", type=int, default=10**7)
    e.set_defaults(func=cmd_search)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        args.func(args, out)
    except UsageError as exc:
        print(f"jointarray {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, UnidentifiableError, ConfigError, BudgetExceededError,
            GeometryError, DimensionError) as exc:
        print(f"jointarray {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

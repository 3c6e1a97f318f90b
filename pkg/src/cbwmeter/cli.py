"""Command-line front end.

Exit status: 0 success, 1 usage/validation error, 2 physics check failed.
All randomness comes from ``--seed``; output is deterministic byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import estimator, fringes, netlist, unitary

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _matrix(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


def _dump_json(data) -> str:
    return json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(args.output).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {args.output}: {exc.strerror}") from exc


def _table(args, header, rows, extra=None):
    if args.format == "csv":
        _emit(args, _dump_csv(header, rows))
    else:
        data = dict(extra or {})
        data["rows"] = [dict(zip(header, r)) for r in rows]
        _emit(args, _dump_json(data))


def _params(args, **override) -> fringes.InterferogramParams:
    fields = dict(mu=args.mu, a=args.a, b=args.b, f=args.f, M=args.M,
                  phase_offset=args.phase_offset, sigma=args.sigma, m=args.m, L=args.L)
    if getattr(args, "snr", None) is not None:
        if args.snr <= 0:
            raise UsageError("--snr must be positive")
        fields["sigma"] = args.b * args.mu / args.snr
    fields.update(override)
    try:
        return fringes.InterferogramParams(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# --------------------------------------------------------------------------
# commands

def cmd_unitary(args):
    p = unitary.MziParams(args.phi, args.zeta)
    u = unitary.mzi_unitary(p)
    closed = unitary.cbw_closed_form(p.phi_prime, args.M)
    data = {
        "phi": p.phi, "zeta": p.zeta, "phi_prime": p.phi_prime, "M": args.M,
        "mzi_unitary": _matrix(u),
        "mzi_unitarity_error": unitary.unitarity_error(u),
        "cbw_closed_form": _matrix(closed),
        "cbw_intensities": {"i_a": float(np.cos(args.M * p.phi_prime / 2) ** 2),
                            "i_b": float(np.sin(args.M * p.phi_prime / 2) ** 2)},
    }
    if args.format == "csv":
        rows = [(name, i, j, float(m[i, j].real), float(m[i, j].imag))
                for name, m in (("mzi_unitary", u), ("cbw_closed_form", closed))
                for i in range(2) for j in range(2)]
        _emit(args, _dump_csv(["matrix", "row", "col", "re", "im"], rows))
    else:
        _emit(args, _dump_json(data))
    return EXIT_OK


def _load_netlist(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return netlist.parse_network(text)


def cmd_chain_verify(args):
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    cfg = netlist.ChainConfig(args.M, args.phi, args.zeta, args.psi, args.kind)
    if args.netlist:
        spec = _load_netlist(args.netlist)
        u = unitary.rotation_frame(netlist.compile_network(spec))
        match = unitary.equal_up_to_global_phase(u, unitary.cbw_closed_form(args.phi - args.zeta, args.M), args.tol)
        data = {"source": str(args.netlist), "M": args.M, "phi_prime": args.phi - args.zeta,
                "passed": match.equal, "residual": match.residual, "phase": match.phase}
        passed = match.equal
    else:
        rep = netlist.verify_mth_power(cfg, args.tol)
        data = {"config": asdict(cfg), "tol": args.tol, **asdict(rep)}
        passed = rep.passed
    _emit(args, _dump_json(data))
    return EXIT_OK if passed else EXIT_CHECK


def cmd_psi_search(args):
    res = netlist.psi_search(args.M, args.tol, args.grid, args.kind)
    _table(args, ["psi", "residual"], res.table,
           extra={"M": res.M, "kind": res.kind, "best_psi": res.best_psi,
                  "best_residual": res.best_residual, "found": res.found, "tol": args.tol})
    return EXIT_OK


def cmd_fringes(args):
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    phi = args.phi_max * np.arange(args.points) / args.points
    curve = fringes.ideal_fringes(args.M, args.i0, phi)
    _table(args, ["phi", "i_a", "i_b"], zip(curve.phi_values, curve.i_a, curve.i_b),
           extra={"M": curve.M, "i0": curve.i0})
    return EXIT_OK


def cmd_synth(args):
    rec = fringes.synthesize(_params(args), args.seed)
    if args.output in (None, "-"):
        sys.stdout.write(fringes.interferogram_to_csv(rec))
    else:
        try:
            fringes.write_interferogram(rec, args.output)
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc.strerror}") from exc
    return EXIT_OK


def cmd_fit(args):
    try:
        rec = fringes.read_interferogram(args.input)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    window = None
    if args.fmin is not None or args.fmax is not None:
        if args.fmin is None or args.fmax is None:
            raise UsageError("--fmin and --fmax go together")
        window = (args.fmin, args.fmax)
    try:
        fit = estimator.fit_frequency(rec, window, known_nuisance=args.known)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = {"fit": fit.to_dict()}
    if fit.f_hat > 0:
        wl = estimator.wavelength_from_fit(fit, rec.params.L,
                                           estimator.fractional_wavelength_uncertainty(rec.params))
        data["wavelength"] = wl.to_dict()
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_fisher(args):
    p = _params(args)
    rep = estimator.fisher_information(p)
    data = rep.to_dict()
    data["crlb_eq7"] = estimator.crlb(p)
    data["enhancement_factor"] = estimator.enhancement_factor(p)
    data["params"] = asdict(p)
    _emit(args, _dump_json(data))
    return EXIT_OK


def _check_trials(trials):
    if trials < 2:
        raise UsageError("--trials must be >= 2")


def cmd_mc(args):
    _check_trials(args.trials)
    p = _params(args)
    rep = estimator.monte_carlo(p, args.trials, args.seed, known_nuisance=not args.full_fit,
                                workers=args.workers)
    data = rep.to_dict()
    data["params"] = asdict(p)
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_scaling(args):
    _check_trials(args.trials)
    try:
        Ms = [int(s) for s in args.Ms.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"--Ms: {exc}") from exc
    base = _params(args, M=1)
    try:
        rep = estimator.scaling_sweep(base, Ms, args.trials, args.seed, fixed=args.fixed,
                                      known_nuisance=not args.full_fit, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = rep.to_dict()
    data["base"] = asdict(base)
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_parse(args):
    spec = _load_netlist(args.netlist)
    u = netlist.compile_network(spec)
    data = {"canonical": netlist.format_network(spec), "unitary": _matrix(u),
            "unitarity_error": unitary.unitarity_error(u)}
    _emit(args, _dump_json(data))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing

def _add_output(p, default="json", csv_ok=False):
    choices = ("csv", "json") if csv_ok or default == "csv" else ("json",)
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.add_argument("--format", choices=choices, default=default, help="output format")


def _add_interferogram(p, snr=False):
    g = p.add_argument_group("interferogram")
    g.add_argument("--mu", type=float, default=100.0, help="mean intensity (counts per sample)")
    g.add_argument("--a", type=float, default=1.0, help="offset (dimensionless)")
    g.add_argument("--b", type=float, default=1.0, help="visibility in [0, 1]")
    g.add_argument("--f", type=float, default=7.3, help="base spatial frequency (cycles per length unit)")
    g.add_argument("--M", type=int, default=1, help="number of coupled MZIs")
    g.add_argument("--phase-offset", type=float, default=0.0, help="fringe phase offset (rad)")
    g.add_argument("--sigma", type=float, default=5.0, help="Gaussian noise std (counts)")
    g.add_argument("--m", type=int, default=512, help="number of samples")
    g.add_argument("--L", type=float, default=1.0, help="wedge length (length units)")
    if snr:
        g.add_argument("--snr", type=float, default=None,
                       help="amplitude SNR b*mu/sigma; overrides --sigma")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbwmeter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("unitary", help="single-MZI unitary and closed-form M-th power")
    p.add_argument("--phi", type=float, required=True, help="longitudinal phase (rad)")
    p.add_argument("--zeta", type=float, default=0.0, help="transverse phase (rad)")
    p.add_argument("--M", type=int, default=1, help="power for the closed form")
    _add_output(p, csv_ok=True)
    p.set_defaults(func=cmd_unitary)

    p = sub.add_parser("chain-verify", help="check a coupled chain against the closed-form M-th power")
    p.add_argument("--M", type=int, default=2, help="number of coupled MZIs")
    p.add_argument("--phi", type=float, required=True, help="longitudinal phase (rad)")
    p.add_argument("--zeta", type=float, default=0.0, help="transverse phase (rad)")
    p.add_argument("--psi", type=float, default=0.0, help="dummy coupling phase (rad)")
    p.add_argument("--kind", choices=netlist.DUMMY_KINDS, default="mzi", help="dummy block realization")
    p.add_argument("--tol", type=float, default=1e-9, help="max-norm tolerance")
    p.add_argument("--netlist", help="verify this netlist file instead of the built chain")
    _add_output(p)
    p.set_defaults(func=cmd_chain_verify)

    p = sub.add_parser("psi-search", help="grid search of the dummy coupling phase")
    p.add_argument("--M", type=int, default=2, help="number of coupled MZIs")
    p.add_argument("--grid", type=int, default=64, help="number of psi points in [0, 2pi)")
    p.add_argument("--tol", type=float, default=1e-9, help="max-norm tolerance")
    p.add_argument("--kind", choices=netlist.DUMMY_KINDS, default="mzi", help="dummy block realization")
    _add_output(p, default="csv")
    p.set_defaults(func=cmd_psi_search)

    p = sub.add_parser("fringes", help="ideal output intensities versus phi")
    p.add_argument("--M", type=int, default=1, help="number of coupled MZIs")
    p.add_argument("--points", type=int, default=1000, help="grid points")
    p.add_argument("--i0", type=float, default=1.0, help="input intensity")
    p.add_argument("--phi-max", type=float, default=2 * math.pi, help="grid spans [0, phi_max) (rad)")
    _add_output(p, default="csv")
    p.set_defaults(func=cmd_fringes)

    p = sub.add_parser("synth", help="synthesize a noisy interferogram (CSV + JSON sidecar)")
    _add_interferogram(p, snr=True)
    p.add_argument("--seed", type=int, default=0, help="64-bit noise seed")
    p.add_argument("-o", "--output", default="-", help="CSV path; sidecar written to <path>.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="estimate fringe frequency and wavelength from a CSV record")
    p.add_argument("--input", required=True, help="interferogram CSV with sidecar")
    p.add_argument("--fmin", type=float, help="search window low edge (cycles per length unit)")
    p.add_argument("--fmax", type=float, help="search window high edge (cycles per length unit)")
    p.add_argument("--known", action="store_true", help="hold offset, visibility and phase at sidecar values")
    _add_output(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fisher", help="Fisher information, CRLB and wavelength bounds")
    _add_interferogram(p, snr=True)
    _add_output(p)
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("mc", help="Monte Carlo estimator variance versus the CRLB")
    _add_interferogram(p, snr=True)
    p.add_argument("--trials", type=int, default=1000, help="number of trials")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--full-fit", action="store_true", help="fit offset, amplitude and phase as well")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    _add_output(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("scaling", help="Monte Carlo sweep over M with log-log slope")
    _add_interferogram(p, snr=True)
    p.add_argument("--Ms", default="1,2,4,8", help="comma-separated M values")
    p.add_argument("--fixed", choices=("f", "k_m"), default="f", help="hold base frequency or fringe count fixed")
    p.add_argument("--trials", type=int, default=1000, help="trials per M")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--full-fit", action="store_true", help="fit offset, amplitude and phase as well")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    _add_output(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("parse", help="parse and compile a netlist file")
    p.add_argument("netlist", help="netlist path")
    _add_output(p)
    p.set_defaults(func=cmd_parse)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, netlist.NetlistError) as exc:
        print(f"cbwmeter {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"cbwmeter {args.command}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point `dnls-orbit`.

Fields travel between subcommands as columnar text files
(`# L=.. N=.. t=..` header, then `x re im` per line).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import backlund, field, harness, jost, soliton, spectral
from .errors import DnlsError
from .evolve import EvolverConfig, StepSizeWarning, conserved, trajectory


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _param(text: str) -> soliton.SpectralParam:
    return soliton.SpectralParam(_complex(text))


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_soliton(args) -> int:
    z = _param(args.z)
    grid = field.Grid(args.L, args.N)
    if args.kind == "field":
        f = soliton.soliton_family(soliton.SolitonParams(z, args.a, args.b), args.t, grid)
        field.write_field(args.output, f, args.t, {"z": f"{z.z}"})
    elif args.kind == "eigenvector":
        field.write_vector(args.output, soliton.eigenvector_field(z, grid), 0.0,
                           {"z": f"{z.z}"})
    else:
        field.write_matrix(args.output, soliton.fundamental_matrix_field(z, grid), 0.0,
                           {"z": f"{z.z}"})
    return 0


def cmd_evolve(args) -> int:
    q0, t0 = field.read_field(args.input)
    cfg = EvolverConfig(dt=args.dt, T=args.T, dealias=not args.no_dealias,
                        store_every=args.store_every, strict_dt=args.strict_dt)
    c0 = conserved(q0)
    last = q0
    snapdir = Path(args.snapshots) if args.snapshots else None
    if snapdir:
        snapdir.mkdir(parents=True, exist_ok=True)
    for t, v in trajectory(q0, cfg, t0=t0):
        last = field.GridField(q0.grid, v)
        if snapdir:
            field.write_field(snapdir / f"q_{t:012.6f}.txt", last, t)
    field.write_field(args.output, last, t0 + cfg.T)
    drift = conserved(last).relative_drift(c0)
    _print_json({"t": t0 + cfg.T, "drift": {"M": drift[0], "E": drift[1], "P": drift[2]}})
    if args.drift_tol is not None and max(drift) >= args.drift_tol:
        print(f"conservation drift {max(drift):.3g} >= {args.drift_tol:g}", file=sys.stderr)
        return 1
    return 0


def _eig_json(e: spectral.EigenResult) -> dict:
    return {"z1": [e.z1.z.real, e.z1.z.imag], "xi": e.z1.xi, "eta": e.z1.eta,
            "evans_residual": e.evans_residual, "iterations": e.iterations}


def cmd_spectrum(args) -> int:
    q0, _ = field.read_field(args.input)
    e = spectral.find_eigenvalue(q0, _param(args.z_guess), args.tol, args.refine)
    if args.eigenvector:
        field.write_vector(args.eigenvector, e.eigenvector, 0.0, {"z": f"{e.z1.z}"})
    _print_json(_eig_json(e))
    return 0


def cmd_bt(args) -> int:
    if args.mode == "forward":
        q, t = field.read_field(args.field)
        phi, _ = field.read_vector(args.vector)
        qn, phin = backlund.bt_forward(q, phi, _param(args.z))
        field.write_field(args.output, qn, t)
        if args.vector_out:
            field.write_vector(args.vector_out, phin, t)
        return 0
    if args.mode == "down":
        q0, t = field.read_field(args.field)
        e = spectral.find_eigenvalue(q0, _param(args.z), refine=args.refine)
        down = backlund.bt_down(q0, e)
        field.write_field(args.output, down.q1, t, {"z1": f"{e.z1.z}"})
        if args.vector_out:
            field.write_vector(args.vector_out, down.phi1, t)
        info = _eig_json(e)
        info.update(q1_norm=field.l2_norm(down.q1), smallness_ratio=down.smallness_ratio)
        _print_json(info)
        return 0
    # up
    q1, t = field.read_field(args.field)
    z1 = _param(args.z)
    if args.jost:
        mu, _ = field.read_matrix(args.jost)
    else:
        mu = jost.jost_initial(q1, z1, t=t).mu
    coeffs = [float(c) for c in args.coeffs.split(",")]
    if len(coeffs) != 4:
        raise ValueError("--coeffs takes a1,b1,a2,b2")
    Q = backlund.bt_up(q1, mu, coeffs, z1)
    field.write_field(args.output, Q, t)
    pred = backlund.predict_modulation(coeffs, z1)
    _print_json({"shift": pred.shift, "phase": pred.phase})
    return 0


def _write_record(rec: harness.StabilityRecord, stem: Path) -> None:
    rec.to_json(stem.with_suffix(".json"))
    rec.write_csv(stem.with_suffix(".csv"))


def cmd_pipeline(args) -> int:
    cfg = harness.load_config(args.config)
    rec = harness.run_pipeline(cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_record(rec, out)
    print(f"sup_t d = {rec.sup_distance:.6g}  |z1 - z0| = {rec.z1_shift:.3g}  "
          f"round trip = {rec.roundtrip_error:.3g}  ({rec.runtime:.1f} s)")
    for v in rec.violations:
        print(f"VIOLATION: {v}", file=sys.stderr)
    return 0 if rec.ok else 1


def cmd_sweep(args) -> int:
    cfgs = harness.load_sweep(args.config)
    res = harness.sweep(cfgs, workers=args.workers)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(res.records):
        _write_record(rec, outdir / f"run_{i:03d}")
    summary = dict(res.summary, errors=[{"index": i, "error": e} for i, e in res.errors],
                   violations={i: r.violations for i, r in enumerate(res.records)
                               if r.violations})
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _print_json(summary)
    bad = res.errors or any(not r.ok for r in res.records)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnls-orbit",
                                description="Soliton stability toolkit for the derivative NLS.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("soliton", help="write closed-form fields")
    s.add_argument("--z", default="1+0.5j")
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--a", type=float, default=0.0, help="shift")
    s.add_argument("--b", type=float, default=0.0, help="phase")
    s.add_argument("--L", type=float, default=field.DEFAULT_L)
    s.add_argument("--N", type=int, default=field.DEFAULT_N)
    s.add_argument("--kind", choices=("field", "eigenvector", "fundamental"), default="field")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_soliton)

    s = sub.add_parser("evolve", help="time-step a field file")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--store-every", type=int, default=1000)
    s.add_argument("--snapshots", help="directory for intermediate snapshots")
    s.add_argument("--no-dealias", action="store_true")
    s.add_argument("--strict-dt", action="store_true",
                   help="fail when dt exceeds the explicit k^2 guidance")
    s.add_argument("--drift-tol", type=float, default=None,
                   help="exit nonzero if any relative M/E/P drift reaches this")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("spectrum", help="locate the discrete eigenvalue")
    s.add_argument("input")
    s.add_argument("--z-guess", default="1+0.5j")
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--refine", type=int, default=16)
    s.add_argument("--eigenvector", help="write the normalized eigenvector here")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("bt", help="Backlund transformations on files")
    s.add_argument("mode", choices=("forward", "down", "up"))
    s.add_argument("--field", required=True)
    s.add_argument("--vector", help="eigenvector file (forward)")
    s.add_argument("--jost", help="Jost matrix file (up; computed at the field's t if absent)")
    s.add_argument("--coeffs", help="a1,b1,a2,b2 (up)")
    s.add_argument("--z", default="1+0.5j", help="spectral parameter (guess for down)")
    s.add_argument("--refine", type=int, default=16)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--vector-out")
    s.set_defaults(func=cmd_bt)

    s = sub.add_parser("pipeline", help="one experiment from a config file")
    s.add_argument("config")
    s.add_argument("-o", "--output", default="record",
                   help="output stem; writes <stem>.json and <stem>.csv")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("sweep", help="many experiments from a config file with [sweep]")
    s.add_argument("config")
    s.add_argument("-o", "--output-dir", default="sweep_out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bt":
        need = {"forward": ("vector",), "up": ("coeffs",), "down": ()}[args.mode]
        for name in need:
            if getattr(args, name) is None:
                build_parser().error(f"bt {args.mode} requires --{name}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        try:
            return args.func(args)
        except (DnlsError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2


if __name__ == "__main__":
    sys.exit(main())

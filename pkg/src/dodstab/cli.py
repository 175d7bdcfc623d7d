"""Command-line driver: ``dodstab run | convergence | stability | mesh-info``.

Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 a study
missed one of its thresholds.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys

import numpy as np

from . import studies
from .config import ConfigError, RunConfig, load_config
from .mesh import CellKind, MeshError, RampGeometry, build_mesh, find_stabilized_cells
from .solver import default_beta, run
from .timestep import BlowUpError
from .verification import energy_csv, energy_growth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_THRESHOLD = 4


def _tag(gamma: float, p: int | None = None, N: int | None = None) -> str:
    parts = [f"g{gamma:g}"]
    if p is not None:
        parts.append(f"p{p}")
    if N is not None:
        parts.append(f"N{N}")
    return "_".join(parts)


class Summary:
    """Structured text summary, one section per run or study."""

    def __init__(self, cfg: RunConfig, command: str):
        self.parser = configparser.ConfigParser(interpolation=None)
        self.parser.optionxform = str
        self.parser["command"] = {"name": command}
        self.parser["config"] = {
            line.split(" = ", 1)[0]: line.split(" = ", 1)[1]
            for line in cfg.to_text().splitlines()
        }

    def section(self, name: str, values: dict):
        self.parser[name] = {k: _fmt(v) for k, v in values.items()}

    def text(self) -> str:
        buf = io.StringIO()
        self.parser.write(buf)
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "pass" if v else "FAIL"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _errors_csv(N, res) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "h", "dt", "steps", "l1_error", "linf_error", "max_abs", "max_abs0"])
    w.writerow([N, repr(1.0 / N), repr(res.dt), res.steps, f"{res.l1_error:.12e}",
                f"{res.linf_error:.12e}", f"{res.max_abs:.12e}", f"{res.max_abs0:.12e}"])
    return buf.getvalue()


def cmd_run(cfg: RunConfig, summary: Summary, out: str) -> int:
    status = EXIT_OK
    for g in cfg.gamma_deg:
        for p in cfg.p:
            for N in cfg.N:
                tag = _tag(g, p, N)
                try:
                    res = run(N, p, g, cfg.x0, cfg.T, cfg.cfl, cfg.stabilization, cfg.omega)
                except BlowUpError as err:
                    summary.section(f"run {tag}", {"status": "blow-up", "step": err.step,
                                                   "t": err.t, "max_abs": err.value})
                    print(f"{tag}: {err}", file=sys.stderr)
                    status = EXIT_BLOWUP
                    continue
                _write(os.path.join(out, f"energy_{tag}.csv"), energy_csv(res.log))
                _write(os.path.join(out, f"errors_{tag}.csv"), _errors_csv(N, res))
                summary.section(f"run {tag}", {
                    "status": "ok", "dt": res.dt, "steps": res.steps,
                    "scheme": res.scheme.value, "l1_error": res.l1_error,
                    "linf_error": res.linf_error, "max_abs": res.max_abs,
                    "max_abs0": res.max_abs0,
                    "energy_growth": energy_growth(res.log),
                })
                print(f"{tag}: L1 {res.l1_error:.3e}  Linf {res.linf_error:.3e}")
    return status


def cmd_convergence(cfg: RunConfig, summary: Summary, out: str) -> int:
    if len(cfg.N) < 2:
        for g in cfg.gamma_deg:
            for p in cfg.p:
                table = studies.convergence_study(p, cfg.N, g, cfg.x0, cfg.T, cfg.cfl,
                                                  cfg.stabilization, cfg.omega)
                _write(os.path.join(out, f"convergence_{_tag(g, p)}.csv"), table.to_csv())
        print("a convergence study needs at least two meshes (--N 20 40 ...)", file=sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK
    for g in cfg.gamma_deg:
        for p in cfg.p:
            tag = _tag(g, p)
            try:
                table = studies.convergence_study(
                    p, cfg.N, g, cfg.x0, cfg.T, cfg.cfl, cfg.stabilization, cfg.omega,
                    on_row=lambda N, r: print(f"{tag} N={N}: L1 {r.l1_error:.3e} "
                                              f"Linf {r.linf_error:.3e}"))
            except BlowUpError as err:
                summary.section(f"convergence {tag}", {"status": "blow-up", "step": err.step})
                print(f"{tag}: {err}", file=sys.stderr)
                status = EXIT_BLOWUP
                continue
            _write(os.path.join(out, f"convergence_{tag}.csv"), table.to_csv())
            v = studies.convergence_verdict(table, p)
            summary.section(f"convergence {tag}", {
                "l1_slope": v["l1_slope"], "l1_threshold": p + studies.L1_MARGIN,
                "l1_verdict": v["l1_pass"], "linf_slope": v["linf_slope"],
                "linf_threshold": p + studies.LINF_MARGIN, "linf_verdict": v["linf_pass"],
            })
            print(f"{tag}: L1 slope {v['l1_slope']:.3f}  Linf slope {v['linf_slope']:.3f}")
            if status == EXIT_OK and not (v["l1_pass"] and v["linf_pass"]):
                status = EXIT_THRESHOLD
    return status


def cmd_stability(cfg: RunConfig, summary: Summary, out: str) -> int:
    status = EXIT_OK
    for g in cfg.gamma_deg:
        for p in cfg.p:
            tag = _tag(g, p)
            disc, dt = studies.discretization(cfg.eig_N, p, g, cfg.x0, cfg.stabilization,
                                              cfg.omega, cfl=cfg.cfl)
            samples = studies.form_samples(disc, cfg.samples, cfg.seed)
            min_ratio = min(s.ratio for s in samples)
            min_eig = studies.min_symmetric_eigenvalue(disc, dt)
            try:
                bump = studies.bump_run(cfg.N[0], p, g, cfg.x0, studies.BUMP_T, cfg.cfl,
                                        cfg.stabilization, cfg.omega)
                growth, drift = bump.growth, bump.mass_drift
                _write(os.path.join(out, f"energy_bump_{_tag(g, p, cfg.N[0])}.csv"),
                       energy_csv(bump.log))
            except BlowUpError as err:
                print(f"{tag}: bump run {err}", file=sys.stderr)
                growth, drift = float("inf"), float("inf")
                status = EXIT_BLOWUP
            except ValueError as err:
                print(f"{tag}: invalid bump premise: {err}", file=sys.stderr)
                growth, drift = float("nan"), float("nan")
                status = EXIT_CONFIG
            verdicts = {
                "form_verdict": min_ratio >= -studies.FORM_TOL,
                "eigenvalue_verdict": min_eig >= -studies.FORM_TOL,
                "energy_verdict": growth <= studies.ENERGY_TOL,
            }
            summary.section(f"stability {tag}", {
                "mesh_N": cfg.eig_N, "samples": cfg.samples,
                "min_form_ratio": min_ratio,
                "max_jump_identity_error": max(s.jump_error for s in samples),
                "max_decomposition_error": max(s.decomposition_error for s in samples),
                "min_symmetric_eigenvalue": min_eig,
                "bump_N": cfg.N[0], "bump_T": studies.BUMP_T,
                "bump_energy_growth": growth, "bump_mass_drift": drift,
                **verdicts,
            })
            print(f"{tag}: min form/|u|^2 {min_ratio:.3e}  min eig {min_eig:.3e}  "
                  f"growth {growth:.3e}")
            if status == EXIT_OK and not all(verdicts.values()):
                status = EXIT_THRESHOLD
    return status


def cmd_mesh_info(cfg: RunConfig, summary: Summary, out: str) -> int:
    for g in cfg.gamma_deg:
        ramp = RampGeometry.from_degrees(g, cfg.x0)
        for N in cfg.N:
            mesh = build_mesh(N, ramp)
            patterns = find_stabilized_cells(mesh, default_beta(ramp))
            tag = _tag(g, N=N)
            cut = mesh.kinds != CellKind.FULL
            info = {
                "cells": mesh.n_cells,
                "faces": mesh.n_faces,
                **{f"cells_{k.name.lower()}": int(np.sum(mesh.kinds == k)) for k in CellKind},
                "ramp_faces": len(mesh.ramp_faces()),
                "stabilized_cells": len(patterns),
                "min_cut_area_over_h2": float(mesh.areas[cut].min() / mesh.h**2) if cut.any() else 1.0,
                "area_sum": float(mesh.areas.sum()),
                "domain_area": ramp.domain_area(),
            }
            summary.section(f"mesh {tag}", info)
            _write(os.path.join(out, f"mesh_{tag}.txt"), mesh.dump())
            print(f"{tag}: {mesh.n_cells} cells, {len(patterns)} stabilized, "
                  f"min cut area {info['min_cut_area_over_h2']:.3e} h^2")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "stability": cmd_stability,
    "mesh-info": cmd_mesh_info,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dodstab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="key=value file; command-line flags override it")
    ap.add_argument("--gamma", nargs="+", type=float, help="ramp angle(s) in degrees")
    ap.add_argument("--x0", type=float, help="ramp foot on the bottom edge")
    ap.add_argument("--p", nargs="+", type=int, help="polynomial degree(s)")
    ap.add_argument("--N", nargs="+", type=int, help="grid size(s), increasing")
    ap.add_argument("--T", type=float, help="final time")
    ap.add_argument("--cfl", type=float, help="CFL factor in dt = cfl/(2p+1) h/|beta|")
    ap.add_argument("--no-stabilization", action="store_true", help="switch the penalty off")
    ap.add_argument("--omega", type=float, help="capacity factor (default 1/(2p+1))")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="seed of the random stability samples")
    ap.add_argument("--samples", type=int, help="random samples per degree")
    return ap


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    flags = {
        "gamma_deg": args.gamma, "x0": args.x0, "p": args.p, "N": args.N, "T": args.T,
        "cfl": args.cfl, "omega": args.omega, "output_dir": args.out, "seed": args.seed,
        "samples": args.samples,
    }
    changes = {k: (tuple(v) if isinstance(v, list) else v) for k, v in flags.items() if v is not None}
    if args.no_stabilization:
        changes["stabilization"] = False
    return cfg.replace(**changes)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    summary = Summary(cfg, args.command)
    try:
        status = COMMANDS[args.command](cfg, summary, out)
    except MeshError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        status = EXIT_CONFIG
    summary.section("result", {"exit_code": status})
    _write(os.path.join(out, f"summary_{args.command}.txt"), summary.text())
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: run experiments, recover fluxes, audit states.

Exit codes: 0 success, 1 runtime failure, 2 bad arguments or config,
3 audit failure under --strict.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import diagnostics as diag
from . import euler1d, fv1d
from . import flux_recovery as fr
from . import mesh as msh
from . import time_dec
from .config import ConfigError, RunConfig
from .conslaw import make_law
from .errors import RdlabError
from .rd_core import Discretization, Scheme

FMT = "%.17g"


def _fmt(x):
    return FMT % float(x)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) if isinstance(c, (int, str)) else _fmt(c)
                              for c in row) + "\n")


def _initial_field(name, coords):
    x = coords[:, 0]
    if name == "cosine":
        return 1.0 + np.cos(2.0 * np.pi * (x + 0.5))
    if name == "sine":
        return np.sin(2.0 * np.pi * x)
    if name == "riemann":
        return np.where(x < 0.5, 1.0, 0.0)
    if name == "bump":
        r2 = np.sum((coords - 0.5) ** 2, axis=1)
        return np.exp(-40.0 * r2)
    raise ConfigError(f"unknown initial condition {name!r}")


def _build_mesh(cfg):
    kind = cfg.get("mesh", "kind")
    degree = cfg.get_int("mesh", "degree")
    x0, x1 = cfg.get_float("mesh", "x0"), cfg.get_float("mesh", "x1")
    if kind == "interval":
        return msh.build_interval_mesh(
            cfg.get_int("mesh", "n"), x0, x1,
            periodic=cfg.get_bool("mesh", "periodic"), degree=degree,
        )
    if kind == "structured_tri":
        y0, y1 = cfg.get_float("mesh", "y0"), cfg.get_float("mesh", "y1")
        return msh.build_structured_tri_mesh(
            cfg.get_int("mesh", "nx"), cfg.get_int("mesh", "ny"),
            ((x0, y0), (x1, y1)), degree=degree,
        )
    raise ConfigError(f"unknown mesh kind {kind!r}")


def _write_manifest(cfg, outdir, extra=()):
    lines = [f"rdlab.version={__version__}", f"numpy.version={np.__version__}"]
    lines += cfg.manifest_lines()
    lines += list(extra)
    with open(os.path.join(outdir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_run(args):
    cfg = RunConfig.load(args.config)
    outdir = args.out or cfg.get("run", "out")
    os.makedirs(outdir, exist_ok=True)
    law_name = cfg.get("law", "name")
    if law_name.startswith("euler"):
        return _run_euler(cfg, outdir, args)
    mesh = _build_mesh(cfg)
    law = make_law(law_name, dim=mesh.dim)
    disc = Discretization(mesh, law)
    scheme = Scheme(
        kind=cfg.get("scheme", "kind"),
        tau_scale=cfg.get_float("scheme", "tau_scale"),
        theta_e=cfg.get_float("scheme", "theta_e"),
        gamma_jump=cfg.get_float("scheme", "gamma_jump"),
        alpha=cfg.get_float("scheme", "alpha", default=None),
    )
    tcfg = time_dec.DecConfig(
        method=cfg.get("time", "method"),
        iterations=cfg.get_int("time", "dec_iterations", default=None),
        cfl=cfg.get_float("time", "cfl"),
    )
    u0 = _initial_field(cfg.get("run", "initial"), disc.dofmap.dof_coords)
    u_b = None if mesh.periodic or not mesh.boundary_faces else 0.0
    series = []
    history = [u0[:, None]]

    def log(t, u, mass_total, rnorm):
        series.append((t, mass_total[0], rnorm))
        history.append(u.copy())

    u, _ = time_dec.dec_run(
        disc, u0, cfg.get_float("time", "t_end"), scheme, tcfg,
        u_b=u_b, dt=cfg.get_float("time", "dt", default=None), log=log,
    )
    coords = disc.dofmap.dof_coords
    rows = []
    for i in range(coords.shape[0]):
        rows.append((i, *[_fmt(c) for c in coords[i]],
                     *[_fmt(c) for c in u[i]]))
    hdr = ["dof"] + [f"x{k}" for k in range(mesh.dim)] + \
          [f"u{k}" for k in range(law.m)]
    _write_csv(os.path.join(outdir, "solution.csv"), hdr, rows)
    _write_csv(os.path.join(outdir, "series.csv"), ["t", "mass", "res_inf"],
               series)
    reports = [
        diag.conservation_audit(disc, u, scheme, u_b),
        diag.maximum_principle_audit([h[:, 0] for h in history]),
    ]
    with open(os.path.join(outdir, "audit.txt"), "w") as fh:
        for r in reports:
            fh.write(r.line() + "\n")
    _write_manifest(cfg, outdir)
    if args.strict and not all(r.passed for r in reports):
        print("audit failed", file=sys.stderr)
        return 3
    return 0


def _run_euler(cfg, outdir, args):
    gamma = 1.4
    name = cfg.get("law", "name")
    if "(" in name:
        gamma = float(name.split("(", 1)[1].rstrip(")"))
    correct = cfg.get_bool("corrections", "correct_conservation")
    res = euler1d.run_sod(
        n_cells=cfg.get_int("mesh", "n"),
        t_end=cfg.get_float("time", "t_end"),
        gamma=gamma,
        cfl=cfg.get_float("time", "cfl"),
        correct=correct,
    )
    rows = [
        (i, _fmt(res.x[i]), _fmt(res.w[i, 0]), _fmt(res.w[i, 1]),
         _fmt((gamma - 1.0) * res.w[i, 2]))
        for i in range(res.x.shape[0])
    ]
    _write_csv(os.path.join(outdir, "solution.csv"),
               ["node", "x", "rho", "u", "p"], rows)
    with open(os.path.join(outdir, "defects.txt"), "w") as fh:
        fh.write(f"momentum_defect={_fmt(res.defect_m)}\n")
        fh.write(f"energy_defect={_fmt(res.defect_e)}\n")
        fh.write(f"corrections={'on' if correct else 'off'}\n")
    _write_manifest(cfg, outdir)
    if args.strict and correct and max(res.defect_m, res.defect_e) > 1e-10:
        return 3
    return 0


def cmd_burgers1d(args):
    os.makedirs(args.out, exist_ok=True)
    grid = fv1d.Grid1D(args.n, periodic=args.periodic)
    if args.periodic:
        u0 = 1.0 + np.cos(2.0 * np.pi * (grid.x + 0.5))
    else:
        u0 = np.where(grid.x < 0.5, 1.0, 0.0)
    dt = args.lam * grid.dx
    n_steps = int(np.ceil(args.tend / dt))
    stepper = fv1d.STEPPERS[args.scheme]
    u = u0.copy()
    series = [(0, 0.0, fv1d.total_variation(u, args.periodic),
               float(u.sum() * grid.dx))]
    for k in range(1, n_steps + 1):
        u = stepper(u, args.lam, args.periodic)
        series.append((k, k * dt, fv1d.total_variation(u, args.periodic),
                       float(u.sum() * grid.dx)))
    _write_csv(os.path.join(args.out, "final.csv"), ["x", "u"],
               list(zip(grid.x, u)))
    _write_csv(os.path.join(args.out, "series.csv"),
               ["step", "t", "tv", "mass"], series)
    return 0


def cmd_recover(args):
    data = {}
    with open(args.dump) as fh:
        header = fh.readline()
        ncomp = len(header.strip().split(",")) - 2
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            e, dof = int(parts[0]), int(parts[1])
            data.setdefault(e, {})[dof] = [float(t) for t in parts[2:]]
    graph = msh.reference_graph(2, args.degree)
    system = fr.build_incidence(graph)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    worst = None
    for e in sorted(data):
        psi = np.array([data[e][s] for s in range(graph.n_nodes)])
        fluxes = fr.recover_fluxes(system, psi)
        report = fr.certify(system, fluxes, psi)
        if worst is None or report.balance_defect > worst.balance_defect:
            worst = report
        for k, (tail, head) in enumerate(graph.edges):
            rows.append((e, tail, head, *[_fmt(c) for c in fluxes[k]]))
    hdr = ["element", "tail", "head"] + [f"f{k}" for k in range(ncomp)]
    _write_csv(os.path.join(args.out, "edge_fluxes.csv"), hdr, rows)
    with open(os.path.join(args.out, "certification.txt"), "w") as fh:
        fh.write(f"balance_defect={_fmt(worst.balance_defect)}\n")
        fh.write(f"compat_defect={_fmt(worst.compat_defect)}\n")
        fh.write(f"passed={worst.passed}\n")
    return 0 if worst.passed else 1


def cmd_audit(args):
    cfg = RunConfig.load(args.config)
    mesh = _build_mesh(cfg)
    law = make_law(cfg.get("law", "name"), dim=mesh.dim)
    disc = Discretization(mesh, law)
    scheme = Scheme(kind=cfg.get("scheme", "kind"))
    u = np.loadtxt(args.state, delimiter=",", skiprows=1, ndmin=2)
    u = u[:, -law.m:]
    rset = disc.residual_set(u, scheme)
    reports = [diag.conservation_audit(disc, u, scheme, rset=rset)]
    if law.has_entropy:
        reports.append(diag.entropy_inequality_audit(disc, u, rset))
    ok = True
    for r in reports:
        print(f"{r.name}.defect={_fmt(r.defect)}")
        print(f"{r.name}.tolerance={_fmt(r.tolerance)}")
        print(f"{r.name}.passed={r.passed}")
        if r.name == "conservation" and not r.passed:
            ok = False
    return 0 if ok else 3


def build_parser():
    p = argparse.ArgumentParser(prog="rdlab")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a configured experiment")
    pr.add_argument("config")
    pr.add_argument("--strict", action="store_true")
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=None)
    pr.set_defaults(func=cmd_run)

    pb = sub.add_parser("burgers1d", help="1D Burgers counterexample lab")
    pb.add_argument("--scheme", choices=("cons", "noncons"), default="cons")
    pb.add_argument("--n", type=int, default=100)
    pb.add_argument("--tend", type=float, default=0.5)
    pb.add_argument("--lam", type=float, default=0.25)
    pb.add_argument("--periodic", action="store_true")
    pb.add_argument("--out", default="out")
    pb.set_defaults(func=cmd_burgers1d)

    pc = sub.add_parser("recover", help="flux recovery from a residual dump")
    pc.add_argument("dump")
    pc.add_argument("--degree", type=int, choices=(1, 2), default=1)
    pc.add_argument("--out", default="out")
    pc.set_defaults(func=cmd_recover)

    pa = sub.add_parser("audit", help="audit a solution state")
    pa.add_argument("config")
    pa.add_argument("state")
    pa.set_defaults(func=cmd_audit)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except RdlabError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

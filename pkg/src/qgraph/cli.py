"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 domain error (pole, scar,
degeneracy), 4 invalid input (unreadable or inconsistent graph file, bad
point).  Errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError, QGraphError
from .graph import GraphPoint
from .greens import greens
from .io import load_graph
from .qmap import quantum_map
from .scattering import SCAR_TOL, NearScarWarning, _basis_from, evaluate_scattering
from .spectrum import (default_step, eigenvector_and_normalization, find_eigenvalues,
                       find_unit_eigen_roots, secular)

EXIT_USAGE, EXIT_DOMAIN, EXIT_INPUT = 2, 3, 4


def _number(text: str) -> complex:
    """Parse ``RE`` or ``RE,IM``."""
    parts = text.split(",")
    if len(parts) > 2:
        raise argparse.ArgumentTypeError(f"expected RE or RE,IM, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RE or RE,IM, got {text!r}") from None
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def _point(text: str) -> GraphPoint:
    try:
        return GraphPoint.parse(text)
    except QGraphError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _mat(M) -> list:
    return [[_pair(v) for v in row] for row in M]


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# commands

def cmd_spectrum(args, graph, conds, out):
    roots = find_eigenvalues(graph, conds, args.kmin, args.kmax, tol=args.tol)
    rows = []
    for r in roots:
        C = eigenvector_and_normalization(graph, conds, r.k).C if r.multiplicity == 1 else None
        rows.append((r.k, r.multiplicity, C))
    _write_csv(out, ["k", "multiplicity", "C"], rows)


def cmd_scattering(args, graph, conds, out):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NearScarWarning)
        res = evaluate_scattering(graph, conds, args.k, scar_tol=args.scar_tol)
    doc = {
        "k": _pair(res.k),
        "sigma": _mat(res.sigma),
        "rho": _mat(res.rho),
        "scar": bool(res.scar is not None and res.scar.gap <= args.scar_tol),
        "regularized": res.regularized,
        "warnings": [str(w.message) for w in caught],
    }
    if res.scar is not None:
        doc["scar_vector"] = [_pair(v) for v in res.scar.b]
    json.dump(doc, out, indent=2)
    out.write("\n")


def cmd_greens(args, graph, conds, out):
    g = greens(graph, conds, args.target, args.source, args.energy)
    doc = {"value": _pair(g.value), "case": g.case, "regularized": g.regularized,
           "energy": _pair(g.energy.E), "k": _pair(g.energy.k),
           "target": [g.x.edge, g.x.x], "source": [g.source.edge, g.source.x]}
    json.dump(doc, out, indent=2)
    out.write("\n")


def _sweep_row(args, graph, conds, k):
    try:
        if args.quantity == "xi":
            xi = secular(graph, conds, k)
            return [k, xi.real, xi.imag, abs(xi), ""]
        if args.quantity == "greens":
            g = greens(graph, conds, args.target, args.source, complex(k) ** 2)
            return [k, g.value.real, g.value.imag, g.case, ""]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearScarWarning)
            res = evaluate_scattering(graph, conds, k, scar_tol=args.scar_tol)
        snap = quantum_map(graph, conds, k)
        cond = np.linalg.cond(np.eye(len(snap.UBB)) - snap.UBB) if len(snap.UBB) else 1.0
        flat = [p for v in res.sigma.ravel() for p in (v.real, v.imag)]
        return [k, *flat, int(res.scar is not None and res.scar.gap <= args.scar_tol),
                float(cond), ""]
    except DomainError as exc:
        width = {"xi": 3, "greens": 3}.get(args.quantity, 2 * graph.n_leads ** 2 + 2)
        return [k, *([float("nan")] * width), type(exc).__name__]


def cmd_sweep(args, graph, conds, out):
    if args.steps < 2:
        raise ValueError(f"--steps must be at least 2, got {args.steps}")
    if args.quantity == "greens" and (args.source is None or args.target is None):
        raise ValueError("--quantity greens needs --source and --target")
    ks = [float(k) for k in np.linspace(args.kmin, args.kmax, args.steps)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda k: _sweep_row(args, graph, conds, k), ks))
    if args.quantity == "xi":
        header = ["k", "xi_re", "xi_im", "xi_abs", "error"]
    elif args.quantity == "greens":
        header = ["k", "G_re", "G_im", "case", "error"]
    else:
        n = graph.n_leads
        header = ["k"] + [f"sigma_{i}{j}_{p}" for i in range(n) for j in range(n)
                          for p in ("re", "im")] + ["scar", "cond_I_minus_UBB", "error"]
    _write_csv(out, header, rows)


def cmd_scars(args, graph, conds, out):
    if graph.n_bonds == 0:
        _write_csv(out, _SCAR_HEADER, [])
        return
    nb = 2 * graph.n_bonds

    def md(k):
        s = quantum_map(graph, conds, k)
        return s.UBB, s.dU[:nb, :nb]

    roots = find_unit_eigen_roots(md, args.kmin, args.kmax, tol=args.tol, step=default_step(graph))
    rows = []
    for k, m in roots:
        if m == 1:
            snap = quantum_map(graph, conds, k)
            gap = float(np.min(np.abs(np.linalg.eigvals(snap.UBB) - 1)))
            r = _basis_from(snap, gap).residuals
            rows.append((k, m, gap, r["U_BB b - b"], r["U_LB b"], r["b^dagger U_BL"]))
        else:
            rows.append((k, m, None, None, None, None))
    _write_csv(out, _SCAR_HEADER, rows)


_SCAR_HEADER = ["k0", "multiplicity", "eigenvalue_gap", "res_UBB_b", "res_ULB_b", "res_b_UBL"]


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgraph", description="Quantum graph spectra, "
                                "scattering matrices and Green's functions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("graph", help="graph description file (JSON)")
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    s = sub.add_parser("spectrum", help="eigen-wavenumbers of a compact graph (CSV)")
    common(s)
    s.add_argument("--kmin", type=float, required=True)
    s.add_argument("--kmax", type=float, required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("scattering", help="sigma and rho at one wavenumber (JSON)")
    common(s)
    s.add_argument("--k", type=_number, required=True, metavar="RE[,IM]")
    s.add_argument("--scar-tol", type=float, default=SCAR_TOL)
    s.set_defaults(func=cmd_scattering)

    s = sub.add_parser("greens", help="Green's function value (JSON)")
    common(s)
    s.add_argument("--source", type=_point, required=True, metavar="EDGE:X")
    s.add_argument("--target", type=_point, required=True, metavar="EDGE:X")
    s.add_argument("--energy", type=_number, required=True, metavar="RE[,IM]")
    s.set_defaults(func=cmd_greens)

    s = sub.add_parser("sweep", help="tabulate a quantity over real k (CSV)")
    common(s)
    s.add_argument("--kmin", type=float, required=True)
    s.add_argument("--kmax", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--quantity", choices=("sigma", "xi", "greens"), default="sigma")
    s.add_argument("--source", type=_point, metavar="EDGE:X")
    s.add_argument("--target", type=_point, metavar="EDGE:X")
    s.add_argument("--scar-tol", type=float, default=SCAR_TOL)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("scars", help="perfect scars of an open graph (CSV)")
    common(s)
    s.add_argument("--kmin", type=float, required=True)
    s.add_argument("--kmax", type=float, required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_scars)
    return p


def _report(exc, code):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, QGraphError):
        doc.update(exc.details())
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        graph, conds = load_graph(args.graph)
    except QGraphError as exc:
        return _report(exc, EXIT_INPUT)
    try:
        with _Output(args.output) as out:
            args.func(args, graph, conds, out)
    except DomainError as exc:
        return _report(exc, EXIT_DOMAIN)
    except QGraphError as exc:
        return _report(exc, EXIT_INPUT)
    except ValueError as exc:
        return _report(exc, EXIT_USAGE)
    return 0


if __name__ == "__main__":
    sys.exit(main())

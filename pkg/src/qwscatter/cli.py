"""``qws``: command-line driver.

Exit codes: 0 ok, 1 usage or I/O error, 2 coin validation failure,
3 property failure (a checked quantity exceeded its tolerance).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .eigen import (
    BoundaryVector, combinatorial_eigenfunction, eigen_residual, fpm_star, matching_constant,
)
from .green import Side
from .io import (
    FieldFormatError, atomic_write_text, read_field_csv, smatrix_record, write_field_csv,
    write_heatmap_svg, write_jsonl, write_pgm, write_sigma_plot,
)
from .lattice import BUILTIN_COINS, Chirality, GridField, evolve_iter, validate_coin, validity_radius
from .smatrix import check_corridor, check_unitarity, compute_A

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PROPERTY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QWS_THREADS", "1")))
    except ValueError:
        return 1


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        d = cfg.to_dict()
    else:
        d = ExperimentConfig().to_dict()
    if args.coin is not None:
        d.update(builtin=args.coin, matrices=None)
    if args.n0 is not None:
        d["n0"] = args.n0
    if args.window is not None:
        d["window"] = args.window
    if getattr(args, "theta_grid", None) is not None:
        d.update(theta_grid=args.theta_grid, thetas=None)
    if args.out is not None:
        d["output_dir"] = args.out
    if args.seed is not None:
        d["seed"] = args.seed
    return ExperimentConfig.from_dict(d)


def _valid_coin(cfg: ExperimentConfig):
    c = cfg.coin()
    rep = validate_coin(c, tol=cfg.tol("coin_unitarity"), det_floor=cfg.tol("det_floor"))
    return c, rep


# -- commands --------------------------------------------------------------

def cmd_validate(cfg: ExperimentConfig, args) -> int:
    c, rep = _valid_coin(cfg)
    out = Path(cfg.output_dir)
    text = _dump(rep.to_dict())
    atomic_write_text(out / "validate.json", text)
    sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_INVALID


def _smatrix_point(c, theta, utol, ctol):
    b = compute_A(c, theta)
    u = check_unitarity(b, utol)
    k = check_corridor(b, ctol)
    return b, u, k


def cmd_smatrix(cfg: ExperimentConfig, args) -> int:
    c, rep = _valid_coin(cfg)
    if not rep.passed:
        sys.stderr.write(rep.summary() + "\n")
        return EXIT_INVALID
    utol = args.tol if args.tol is not None else cfg.tol("unitarity")
    ctol = cfg.tol("corridor")
    thetas = cfg.theta_values()
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(lambda t: _smatrix_point(c, t, utol, ctol), thetas))
    out = Path(cfg.output_dir)
    write_jsonl(out / "smatrix.jsonl", [smatrix_record(b, u.defect, k.max_entry) for b, u, k in results])
    lines = ["theta,unitarityDefect,corridorMax,passed"]
    for b, u, k in results:
        lines.append(f"{b.theta:.17g},{u.defect:.17g},{k.max_entry:.17g},{int(u.passed and k.passed)}")
    atomic_write_text(out / "smatrix_summary.csv", "\n".join(lines) + "\n")
    if args.plot:
        write_sigma_plot(out / "sigma.svg", thetas, [b.sigma for b, _, _ in results])
    worst_u = max(u.defect for _, u, _ in results)
    worst_k = max(k.max_entry for _, _, k in results)
    sys.stdout.write(_dump({"points": len(results), "maxUnitarityDefect": worst_u, "maxCorridor": worst_k}))
    return EXIT_OK if all(u.passed and k.passed for _, u, k in results) else EXIT_PROPERTY


def cmd_eigenfunction(cfg: ExperimentConfig, args) -> int:
    c, rep = _valid_coin(cfg)
    if not rep.passed:
        sys.stderr.write(rep.summary() + "\n")
        return EXIT_INVALID
    n0 = c.n0
    if not -n0 <= args.row <= n0:
        raise UsageError(f"--row {args.row} outside [-{n0}, {n0}]")
    try:
        p = Chirality.parse(args.chirality)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    theta = float(args.theta) % (2 * math.pi)
    L = cfg.L
    tol = args.tol if args.tol is not None else cfg.tol("residual")
    out = Path(cfg.output_dir)
    summary = {"theta": theta, "row": args.row, "chirality": p.letter, "window": L}
    fields = {}
    if args.method in ("combinatorial", "both"):
        psi = combinatorial_eigenfunction(c, theta, args.row, p)
        fields["combinatorial"] = psi.evaluator.materialize(L)
        summary["residualCombinatorial"] = eigen_residual(c, psi.evaluator, theta, L)
    if args.method in ("resolvent", "both"):
        u = fpm_star(BoundaryVector.unit(theta, p, args.row, n0 + 2), Side.PLUS, c)
        fields["resolvent"] = u.materialize(L)
        summary["residualResolvent"] = eigen_residual(c, u, theta, L)
    ok = all(v <= tol for k, v in summary.items() if k.startswith("residual"))
    if args.method == "both":
        k = matching_constant(psi, u)
        diff = fields["combinatorial"] - fields["resolvent"] * k
        summary["matchingConstant"] = [k.real, k.imag]
        summary["matchedDifference"] = float(np.abs(diff.data).max())
        write_field_csv(out / "eigen_difference.csv", diff)
        ok = ok and summary["matchedDifference"] <= cfg.tol("agreement")
    for name, f in fields.items():
        write_field_csv(out / f"eigen_{name}.csv", f)
        if args.plot:
            for q in range(4):
                write_pgm(out / f"eigen_{name}_{Chirality(q).letter}.pgm", f.data[..., q])
            write_heatmap_svg(out / f"eigen_{name}.svg", f)
    atomic_write_text(out / "eigen_summary.json", _dump(summary))
    sys.stdout.write(_dump(summary))
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_evolve(cfg: ExperimentConfig, args) -> int:
    c, rep = _valid_coin(cfg)
    if not rep.passed:
        sys.stderr.write(rep.summary() + "\n")
        return EXIT_INVALID
    L = cfg.L
    if args.initial is not None:
        f0 = read_field_csv(args.initial, L)
    else:
        f0 = GridField.delta(L, (0, 0), Chirality.LEFT)
    T = args.steps
    if T < 0:
        raise UsageError("--steps must be nonnegative")
    radius = validity_radius(L, f0.support_radius(), 0)
    if T > radius:
        sys.stderr.write(f"qws: warning: {T} steps exceed the interior-validity radius {radius}; "
                         "amplitude leaving the window is lost\n")
    lines = ["t,norm"]
    f = f0
    for t, f in enumerate(evolve_iter(c, f0, T)):
        lines.append(f"{t},{f.norm():.17g}")
    out = Path(cfg.output_dir)
    atomic_write_text(out / "evolve_norms.csv", "\n".join(lines) + "\n")
    write_field_csv(out / "evolve_final.csv", f)
    if args.plot:
        write_heatmap_svg(out / "evolve_final.svg", f)
    sys.stdout.write(_dump({"steps": T, "validityRadius": radius, "finalNorm": f.norm(),
                            "initialNorm": f0.norm()}))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    from .verify import run_suite

    c, rep = _valid_coin(cfg)
    if not rep.passed:
        sys.stderr.write(rep.summary() + "\n")
        return EXIT_INVALID
    tol = args.tol if args.tol is not None else cfg.tol("residual")
    results = run_suite(args.suite, c, cfg.theta_values(), cfg.L, seed=cfg.seed, tol=tol)
    verdict = {"coin": c.name, "n0": c.n0, "passed": all(r.passed for r in results),
               "suites": [r.to_dict() for r in results]}
    text = _dump(verdict)
    atomic_write_text(Path(cfg.output_dir) / f"verify_{args.suite}.json", text)
    sys.stdout.write(text)
    return EXIT_OK if verdict["passed"] else EXIT_PROPERTY


COMMANDS = {
    "validate": cmd_validate,
    "smatrix": cmd_smatrix,
    "eigenfunction": cmd_eigenfunction,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="experiment JSON file (defaults: example1 coin, n0=1)")
    common.add_argument("--coin", choices=sorted(BUILTIN_COINS), help="override with a builtin coin")
    common.add_argument("--n0", type=int, help="override the box half-width")
    common.add_argument("--window", type=int, help="override the window half-width L")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol", type=float, help="override the gating tolerance")
    common.add_argument("--seed", type=int, help="seed for randomized checks")
    common.add_argument("--plot", action="store_true", help="also write SVG/PGM figures")

    parser = _Parser(prog="qws", description="Scattering computations for 2D quantum walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check coin unitarity and minors")
    sp = sub.add_parser("smatrix", parents=[common], help="S-matrix blocks over a theta grid")
    sp.add_argument("--theta-grid", type=int, dest="theta_grid", help="N points 2 pi k / N")
    ep = sub.add_parser("eigenfunction", parents=[common], help="generalized eigenfunction on the window")
    ep.add_argument("--theta", type=float, required=True)
    ep.add_argument("--row", type=int, default=0, help="incident transverse coordinate b")
    ep.add_argument("--chirality", default="L", help="incident chirality L, R, D or U")
    ep.add_argument("--method", choices=("combinatorial", "resolvent", "both"), default="both")
    vp = sub.add_parser("evolve", parents=[common], help="finite-time evolution U^t f")
    vp.add_argument("--steps", type=int, required=True)
    vp.add_argument("--initial", help="initial field CSV (x1,x2,chirality,re,im); default a Left delta")
    qp = sub.add_parser("verify", parents=[common], help="run property suites")
    qp.add_argument("--suite", choices=("kernels", "resolvents", "eigen", "smatrix", "all"), default="all")
    qp.add_argument("--theta-grid", type=int, dest="theta_grid")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except np.linalg.LinAlgError as exc:
        sys.stderr.write(f"qws: linear solve failed: {exc}\n")
        return EXIT_PROPERTY
    except (ConfigError, UsageError, FieldFormatError, ValueError) as exc:
        sys.stderr.write(f"qws: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"qws: I/O error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

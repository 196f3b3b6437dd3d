"""Command-line front end: ``hemihelix <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import shutil
import sys
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from . import io, plotting
from .rod_model import (
    BISTRIP_QUOTED_FCRIT,
    BISTRIP_CONSTANTS,
    TOY_CONSTANTS,
    CardanPath,
    ElasticConstants,
    centerline,
)
from .solver import minimize
from .spectral import constrained_spectrum
from .variational import h1_norm

log = logging.getLogger("hemihelix")

PRESETS = {"bistrip": BISTRIP_CONSTANTS, "toy": TOY_CONSTANTS}
SWEEP_N = (64, 128, 256, 512)


class Outputs:
    """Tracks files written by a command so a failed run leaves nothing behind."""

    def __init__(self, directory: str | None):
        self.dir = Path(directory) if directory else None
        self.created: list[Path] = []
        self._made_dir = False

    def path(self, name: str) -> Path | None:
        if self.dir is None:
            return None
        if not self.dir.exists():
            self.dir.mkdir(parents=True)
            self._made_dir = True
        p = self.dir / name
        self.created.append(p)
        return p

    def cleanup(self) -> None:
        for p in reversed(self.created):
            if p.is_dir():
                shutil.rmtree(p, ignore_errors=True)
            elif p.exists():
                p.unlink()
        if self._made_dir and self.dir.exists() and not any(self.dir.iterdir()):
            self.dir.rmdir()


def resolve_constants(args) -> ElasticConstants:
    base = PRESETS[args.preset]
    entries: dict = {}
    if args.config:
        entries.update(io.read_config(args.config))
        unknown = set(entries) - set(io.CONSTANT_KEYS)
        if unknown:
            raise io.ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in io.CONSTANT_KEYS:
        value = getattr(args, f"const_{key}")
        if value is not None:
            entries[key] = value
    return io.constants_from_mapping(entries, defaults=base)


def emit(args, text_lines: list[str], payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("\n".join(text_lines))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def quoted_value_note(consts: ElasticConstants, lam0: float) -> str | None:
    same = all(getattr(consts, k) == getattr(BISTRIP_CONSTANTS, k) for k in ("c12", "c13", "c23", "k"))
    if not same:
        return None
    bound = (consts.c13 * consts.k) ** 2 / consts.c23
    return (
        f"note: the quoted reference value is f_crit = {BISTRIP_QUOTED_FCRIT:g}, but (c13 k)^2/c23 = {bound:.6f} "
        f"already lies below it for any length; the formula gives {lam0:.12g} at L = {consts.L:g}"
    )


# --- commands ---------------------------------------------------------------


def cmd_critical_force(args, consts, out: Outputs) -> None:
    lam0 = bif.critical_force(consts)
    num = bif.critical_force_numeric(consts, args.n)
    rel = abs(num - lam0) / abs(lam0)
    lines = [
        f"critical force (closed form): {lam0:.17g}",
        f"critical force (numeric, N={args.n}): {num:.17g}",
        f"relative difference: {rel:.6e}",
    ]
    payload = {"closed_form": lam0, "numeric": num, "n": args.n, "relative_error": rel}
    note = quoted_value_note(consts, lam0)
    if note:
        lines.append(note)
        payload["quoted_value"] = BISTRIP_QUOTED_FCRIT
        payload["quoted_discrepancy"] = BISTRIP_QUOTED_FCRIT - lam0
    if args.sweep:
        rows = []
        for n in SWEEP_N:
            v = bif.critical_force_numeric(consts, n)
            rows.append((n, v, abs(v - lam0)))
        slope = loglog_slope([r[0] for r in rows], [r[2] for r in rows])
        lines.append("N,numeric,abs_error")
        lines += [f"{n},{v:.17g},{e:.6e}" for n, v, e in rows]
        lines.append(f"convergence slope: {slope:.4f}")
        payload["sweep"] = [{"n": n, "numeric": v, "abs_error": e} for n, v, e in rows]
        payload["slope"] = slope
        p = out.path("critical_force_sweep.csv")
        if p:
            io.write_csv(p, ["n", "numeric", "abs_error"], rows)
    p = out.path("critical_force.json")
    if p:
        io.dump_json(p, payload)
    emit(args, lines, payload)


def cmd_kernel(args, consts, out: Outputs) -> None:
    mode = bif.kernel_mode(consts, args.n)
    amp = bif.kernel_amplitude(consts)
    p = out.path("kernel.csv")
    if p:
        io.write_path_csv(p, mode)
    emit(args, [f"kernel amplitude: {amp:.17g}", f"w1(L/2) = {2 * amp:.17g}"], {"kernel_amp": amp, "n": args.n})


def cmd_coeffs(args, consts, out: Outputs) -> None:
    a, b, c = bif.coefficients_closed(consts)
    c1, c2 = bif.c_closed_forms(consts)
    an, bn, cn = bif.coefficients_numeric(consts, args.n)
    curv = bif.reduced_curvature(consts, args.n)
    rows = [("a", a, an), ("b", b, bn), ("c", c, cn)]
    p = out.path("coeffs.csv")
    if p:
        io.write_csv(p, ["coefficient", "closed", "numeric"], rows)
    lines = ["coefficient,closed,numeric"] + [f"{n},{x:.17g},{y:.17g}" for n, x, y in rows]
    lines.append(f"c, first closed form: {c1:.17g}; second closed form: {c2:.17g}")
    lines.append(f"branch curvature f''(0) from the full reduction: {curv:.17g}")
    payload = {
        "closed": {"a": a, "b": b, "c": c},
        "numeric": {"a": an, "b": bn, "c": cn},
        "c_forms": [c1, c2],
        "branch_curvature": curv,
        "n": args.n,
    }
    emit(args, lines, payload)


def _load_path(args, consts) -> CardanPath:
    if args.path:
        path = io.read_path_csv(args.path)
        if path.n_elems != args.n or not math.isclose(path.length, consts.L, rel_tol=1e-12):
            raise io.ConfigError("path CSV does not match --n and L")
        return path
    if args.amplitude:
        return bif.kernel_mode(consts, args.n).scaled(args.amplitude)
    return CardanPath.zeros(args.n, consts.L)


def cmd_spectrum(args, consts, out: Outputs) -> None:
    f = args.f if args.f is not None else bif.critical_force(consts)
    path = _load_path(args, consts)
    spec = constrained_spectrum(path, f, consts, n_eigs=args.n_eigs)
    rows = list(enumerate(spec.eigenvalues))
    p = out.path("spectrum.csv")
    if p:
        io.write_csv(p, ["index", "eigenvalue"], rows)
    emit(
        args,
        ["index,eigenvalue"] + [f"{i},{v:.17g}" for i, v in rows],
        {"f": f, "eigenvalues": [float(v) for v in spec.eigenvalues]},
    )


def _s_values(args) -> list[float]:
    if args.s_values:
        return sorted(set(args.s_values))
    return [float(v) for v in np.round(np.linspace(-args.s_max, args.s_max, args.s_count), 12)]


def quadratic_fit(points) -> tuple[float, float, float]:
    s = np.array([p.s for p in points])
    f = np.array([p.f for p in points])
    c2, c1, c0 = np.polyfit(s, f, 2)
    return float(c0), float(c1), float(c2)


def cmd_branch(args, consts, out: Outputs) -> None:
    s_vals = _s_values(args)
    points = bif.continue_branch(consts, args.n, s_vals)
    lam0 = bif.critical_force(consts)
    rows = [(p.s, p.f, p.mu_min, p.energy_gap, p.phi_max) for p in points]
    p = out.path("branch.csv")
    if p:
        io.write_csv(p, ["s", "f", "mu_min", "energy_gap", "phi_max"], rows)
        side = out.path("branch_paths")
        side.mkdir(exist_ok=True)
        for i, pt in enumerate(points):
            io.write_path_csv(side / f"point_{i:03d}.csv", pt.path)
        plotting.bifurcation_diagram(points, lam0, out.path("bifurcation.svg"))
    lines = ["s,f,mu_min,energy_gap,phi_max"] + [",".join(f"{v:.17g}" for v in r) for r in rows]
    payload = {"lambda0": lam0, "points": [dict(zip(["s", "f", "mu_min", "energy_gap", "phi_max"], r)) for r in rows]}
    if args.fit:
        c0, c1, c2 = quadratic_fit(points)
        c_closed = bif.coefficients_closed(consts)[2]
        lines.append(f"quadratic fit: f(s) = {c0:.12g} + {c1:.6g} s + {c2:.12g} s^2")
        lines.append(f"closed-form c/2 = {c_closed / 2:.12g}; ratio fit/(c/2) = {c2 / (c_closed / 2):.6g}")
        payload["fit"] = {"constant": c0, "linear": c1, "quadratic": c2, "c_half_closed": c_closed / 2}
    emit(args, lines, payload)


def cmd_minimize(args, consts, out: Outputs) -> None:
    f = args.f if args.f is not None else bif.critical_force(consts)
    seed = _load_path(args, consts)
    path, report = minimize(seed, f, consts)
    gap = bif.energy_gap(path, consts, f)
    p = out.path("minimizer.csv")
    if p:
        io.write_path_csv(p, path)
        io.dump_json(out.path("report.json"), report.to_dict())
    payload = dict(report.to_dict(), f=f, energy_gap=gap)
    lines = [f"{k}: {v}" for k, v in sorted(payload.items())]
    emit(args, lines, payload)


def sign_changes(values: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Sign changes of a sampled function, ignoring entries at round-off level."""
    v = np.asarray(values, dtype=float)
    v = v[np.abs(v) > rel_tol * max(np.abs(v).max(), 1e-300)]
    return int(np.count_nonzero(np.diff(np.sign(v)) != 0))


def cmd_shape(args, consts, out: Outputs) -> None:
    s = args.s
    asym = bif.kernel_mode(consts, args.n).scaled(s)
    curves = {"G(s w*)": centerline(asym)}
    payload: dict = {"s": s}
    lines = []
    if s != 0.0:
        pt = bif.continue_branch(consts, args.n, [s])[0]
        branch_path = pt.path
        if pt.mu_min > 0:
            # a stable branch point is a local minimizer; polish it as such
            branch_path, _ = minimize(pt.path, pt.f, consts)
        curves["branch point"] = centerline(branch_path)
        dist = float(np.abs(branch_path.values - asym.values).max())
        changes = sign_changes(branch_path.values[1:-1, 2])
        lines += [
            f"branch force f(s) = {pt.f:.12g}, mu_min = {pt.mu_min:.6g} ({'stable' if pt.mu_min > 0 else 'unstable'})",
            f"sign changes of the third angle: {changes}",
            f"max |phi(s) - s w*| = {dist:.6e}",
        ]
        payload.update(f=pt.f, mu_min=pt.mu_min, sign_changes=changes, max_distance=dist)
    else:
        lines.append("s = 0: straight rod")
    p = out.path("centerline_kernel.csv")
    if p:
        io.write_polyline_csv(p, asym, curves["G(s w*)"])
        if "branch point" in curves:
            io.write_polyline_csv(out.path("centerline_branch.csv"), asym, curves["branch point"])
        plotting.centerline_projections(curves, out.path("shape.svg"), title=f"centerline, s = {s:g}")
    emit(args, lines, payload)


def cmd_count(args, consts, out: Outputs) -> None:
    f = args.f if args.f is not None else bif.critical_force(consts)
    sols = bif.count_stationary(consts, f, args.radius, args.n_seeds, n_elems=args.n, seed=args.seed)
    norms = sorted(h1_norm(s.interior, args.n, consts.L) for s in sols)
    payload = {"f": f, "radius": args.radius, "count": len(sols), "h1_norms": norms, "seed": args.seed}
    p = out.path("count.json")
    if p:
        io.dump_json(p, payload)
    emit(args, [f"stationary points within radius {args.radius:g}: {len(sols)}"], payload)


COMMANDS = {
    "critical-force": cmd_critical_force,
    "kernel": cmd_kernel,
    "coeffs": cmd_coeffs,
    "spectrum": cmd_spectrum,
    "branch": cmd_branch,
    "minimize": cmd_minimize,
    "shape": cmd_shape,
    "count": cmd_count,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with c12, c13, c23, k, L")
    common.add_argument("--preset", choices=sorted(PRESETS), default="bistrip", help="base constants (default bistrip, L = 1)")
    for key in io.CONSTANT_KEYS:
        common.add_argument(f"--{key}", dest=f"const_{key}", type=float, help=f"override {key}")
    common.add_argument("--n", type=int, default=256, help="number of elements (default 256)")
    common.add_argument("--out", help="output directory for CSV/JSON/SVG files")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")
    common.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hemihelix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critical-force", parents=[common], help="closed-form and numeric critical force")
    p.add_argument("--sweep", action="store_true", help="convergence table over N = 64..512")
    sub.add_parser("kernel", parents=[common], help="sampled kernel mode")
    sub.add_parser("coeffs", parents=[common], help="bifurcation coefficients a, b, c")

    for name, helptext in (("spectrum", "smallest Hessian eigenvalues"), ("minimize", "local minimizer")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--f", type=float, help="force (default: critical force)")
        p.add_argument("--path", help="Cardan path CSV (default: straight rod)")
        p.add_argument("--amplitude", type=float, default=0.0, help="use amplitude * kernel as the path")
        if name == "spectrum":
            p.add_argument("--n-eigs", type=int, default=6)

    p = sub.add_parser("branch", parents=[common], help="continue the nontrivial branch")
    p.add_argument("--s-max", type=float, default=0.05)
    p.add_argument("--s-count", type=int, default=21)
    p.add_argument("--s-values", type=float, nargs="+")
    p.add_argument("--fit", action="store_true", help="compare a quadratic fit of f(s) with c/2")

    p = sub.add_parser("shape", parents=[common], help="centerlines of G(s w*) and the branch point")
    p.add_argument("--s", type=float, default=0.02)

    p = sub.add_parser("count", parents=[common], help="count stationary points near the straight rod")
    p.add_argument("--f", type=float, help="force (default: critical force)")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--n-seeds", type=int, default=64)
    return parser


def validate(parser, args) -> None:
    if args.n < 8:
        parser.error("--n must be at least 8")
    if args.command == "coeffs" and args.n < 64:
        parser.error("coeffs needs --n >= 64")
    if args.command == "branch" and not args.s_values and (args.s_count < 1 or args.s_max <= 0):
        parser.error("empty s-range: need --s-count >= 1 and --s-max > 0, or --s-values")
    if args.command == "spectrum" and args.n_eigs < 1:
        parser.error("--n-eigs must be positive")
    if args.command == "count" and (args.radius <= 0 or args.n_seeds < 0):
        parser.error("--radius must be positive and --n-seeds non-negative")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    validate(parser, args)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        consts = resolve_constants(args)
    except (io.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Outputs(args.out)
    try:
        COMMANDS[args.command](args, consts, out)
    except (ValueError, RuntimeError, ArithmeticError, OSError) as exc:
        out.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Bifurcation of the straight rod: critical force, kernel, coefficients and the nontrivial branch."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .rod_model import CardanPath, ChartError, ElasticConstants, energy_cardan
from .solver import DEFAULT_TOL, SolverError, newton_solve
from .spectral import constrained_spectrum, smallest_eigenvalue
from .variational import (
    el_residual_strong,
    force_derivative,
    gradient,
    h1_norm,
    hessian,
    mass_matrix,
    stiffness_matrix,
)

log = logging.getLogger(__name__)


class ContinuationError(RuntimeError):
    def __init__(self, message: str, last_good_s: float):
        super().__init__(f"{message} (last converged s = {last_good_s:g})")
        self.last_good_s = last_good_s


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class BifurcationData:
    lambda0: float
    kernel_amp: float
    a: float
    b: float
    c: float

    @classmethod
    def from_constants(cls, consts: ElasticConstants) -> BifurcationData:
        a, b, c = coefficients_closed(consts)
        return cls(critical_force(consts), kernel_amplitude(consts), a, b, c)


@dataclass(frozen=True)
class BranchPoint:
    s: float
    f: float
    path: CardanPath
    mu_min: float
    energy_gap: float
    gradient_norm: float = 0.0
    iterations: int = 0

    @property
    def phi_max(self) -> float:
        return float(np.abs(self.path.values).max())


def critical_force(consts: ElasticConstants) -> float:
    consts.require_ass0()
    return (consts.c13 * consts.k) ** 2 / consts.c23 - 4.0 * math.pi**2 * consts.c12 / consts.L**2


def kernel_amplitude(consts: ElasticConstants) -> float:
    return consts.c13 * consts.k * consts.L / (2.0 * consts.c23 * math.pi)


def kernel_values(consts: ElasticConstants, t: np.ndarray) -> np.ndarray:
    """Null direction of the linearized operator at the critical force, shape ``(len(t), 3)``."""
    arg = 2.0 * math.pi * np.asarray(t, dtype=float) / consts.L
    return np.stack(
        [kernel_amplitude(consts) * (1.0 - np.cos(arg)), np.zeros_like(arg), -np.sin(arg)], axis=-1
    )


def kernel_mode(consts: ElasticConstants, n_elems: int) -> CardanPath:
    consts.require_ass0()
    t = np.linspace(0.0, consts.L, n_elems + 1)
    return CardanPath(kernel_values(consts, t), consts.L)


def _kernel_interior(consts: ElasticConstants, n_elems: int) -> np.ndarray:
    t = np.linspace(0.0, consts.L, n_elems + 1)
    return kernel_values(consts, t)[1:-1].reshape(-1)


def c_closed_forms(consts: ElasticConstants) -> tuple[float, float]:
    """Two algebraically equivalent closed forms of the third-order coefficient."""
    consts.require_ass0()
    K2 = (consts.c13 * consts.k) ** 2
    lam0 = critical_force(consts)
    first = -(3.0 * (consts.c13 - consts.c23) * K2 / consts.c23**2 + 4.5 * K2 / consts.c23 - lam0 / 4.0)
    second = -((3.0 * consts.c13 + 1.25 * consts.c23) * K2 / consts.c23**2 + math.pi**2 * consts.c12 / consts.L**2)
    return first, second


def coefficients_closed(consts: ElasticConstants) -> tuple[float, float, float]:
    return -consts.L / 2.0, 0.0, c_closed_forms(consts)[1]


def coefficients_numeric(
    consts: ElasticConstants, n_elems: int, step: float = 1e-3, route: str = "weak"
) -> tuple[float, float, float]:
    """``a, b, c`` from finite differences of ``p(s, f) = <w*, F(s w*, f)>``.

    ``route="weak"`` takes ``F = -gradient`` paired with the nodal kernel vector;
    ``route="strong"`` takes the finite-difference Euler-Lagrange residual paired by
    the trapezoid rule.
    """
    consts.require_ass0()
    if n_elems < 64:
        raise ValueError("coefficients_numeric needs at least 64 elements")
    if route not in ("weak", "strong"):
        raise ValueError(f"unknown route {route!r}")
    lam0 = critical_force(consts)
    w = _kernel_interior(consts, n_elems)
    L = consts.L
    h = L / n_elems

    def p(s, f=lam0):
        path = CardanPath.from_interior(s * w, L)
        if route == "weak":
            return -float(w @ gradient(path, f, consts))
        return h * float(w @ el_residual_strong(path, f, consts).reshape(-1))

    e = step
    # p is affine in f, so a unit force increment is exact
    a = ((p(e, lam0 + 1.0) - p(e)) - (p(-e, lam0 + 1.0) - p(-e))) / (2.0 * e)
    p0, p1, m1, p2, m2 = p(0.0), p(e), p(-e), p(2 * e), p(-2 * e)
    b = 0.5 * (p1 - 2.0 * p0 + m1) / e**2
    d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * e**3)
    c = -d3 / (3.0 * a)
    return a, b, c


def reduced_curvature(consts: ElasticConstants, n_elems: int, step: float = 1e-3) -> float:
    """Second derivative ``f''(0)`` of the force along the branch from a Lyapunov-Schmidt reduction.

    Unlike the third-order projection alone, this includes the quadratic correction
    ``psi_2`` in the complement of the kernel, driven by the cubic part of the energy.
    """
    consts.require_ass0()
    lam0 = critical_force(consts)
    L = consts.L
    w = _kernel_interior(consts, n_elems)
    Mw = mass_matrix(n_elems, L) @ w
    H0 = hessian(CardanPath.zeros(n_elems, L), lam0, consts)

    def grad(s):
        return gradient(CardanPath.from_interior(s * w, L), lam0, consts)

    e = step
    g1, g0, gm = grad(e), grad(0.0), grad(-e)
    cubic = (g1 - 2.0 * g0 + gm) / e**2  # D^3 E[w, w, .]
    g2, gm2 = grad(2 * e), grad(-2 * e)
    quartic = float(w @ (g2 - 2.0 * g1 + 2.0 * gm - gm2)) / (2.0 * e**3)  # D^4 E[w, w, w, w]
    bordered = sp.bmat([[H0, Mw[:, None]], [Mw[None, :], None]]).tocsc()
    psi = spl.spsolve(bordered, np.append(-0.5 * cubic, 0.0))[:-1]
    # p(s) = <w, grad(s w + s^2 psi)> up to s^3, balanced against the force term
    load = float(w @ (force_derivative(CardanPath.from_interior(e * w, L), consts)
                      - force_derivative(CardanPath.from_interior(-e * w, L), consts))) / (2.0 * e)
    third = quartic / 6.0 + float(psi @ cubic)
    return -2.0 * third / load


def critical_force_numeric(
    consts: ElasticConstants, n_elems: int, bracket: tuple[float, float] | None = None, rtol: float = 1e-13
) -> float:
    """Force at which the smallest Hessian eigenvalue of the straight rod crosses zero (bisection)."""
    L = consts.L
    zero = CardanPath.zeros(n_elems, L)
    if bracket is None:
        lam0 = critical_force(consts)
        bracket = (0.5 * lam0, 1.5 * lam0)
    lo, hi = bracket

    def mu(f):
        return smallest_eigenvalue(hessian(zero, f, consts))

    m_lo, m_hi = mu(lo), mu(hi)
    if not (m_lo < 0.0 < m_hi):
        raise BracketError(f"no sign change of the smallest eigenvalue on [{lo}, {hi}] ({m_lo:.3g}, {m_hi:.3g})")
    while hi - lo > rtol * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mu(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def energy_gap(point: BranchPoint | CardanPath, consts: ElasticConstants, f: float | None = None) -> float:
    """Energy of the configuration minus that of the straight rod at the same force."""
    if isinstance(point, BranchPoint):
        path, f = point.path, point.f
    else:
        path = point
    return energy_cardan(path, f, consts) - consts.L * (0.5 * consts.c13 * consts.k**2 - f)


def _branch_newton(x, f, s, w, Mw, consts, n_elems, tol, max_iter):
    L = consts.L
    con_scale = max(1.0, float(abs(Mw @ w)))
    for it in range(max_iter + 1):
        path = CardanPath.from_interior(x, L)
        r = gradient(path, f, consts)
        con = float(Mw @ (x - s * w))
        rnorm = float(np.abs(r).max())
        if rnorm < tol and abs(con) < tol * con_scale:
            return path, f, it, rnorm
        if it == max_iter or not np.isfinite(rnorm):
            break
        J = sp.bmat(
            [[hessian(path, f, consts), force_derivative(path, consts)[:, None]], [Mw[None, :], None]]
        ).tocsc()
        d = spl.spsolve(J, -np.append(r, con))
        if not np.all(np.isfinite(d)):
            break
        x = x + d[:-1]
        f = f + d[-1]
    raise SolverError(f"branch corrector failed at s = {s:g} (|grad| = {rnorm:.3g})")


def continue_branch(
    consts: ElasticConstants,
    n_elems: int,
    s_values,
    tol: float = DEFAULT_TOL,
    max_iter: int = 50,
) -> list[BranchPoint]:
    """Follow the nontrivial branch parametrized by ``s = <phi, w*> / <w*, w*>``.

    Each point solves ``gradient(phi, f) = 0`` together with ``<phi - s w*, w*>_L2 = 0``
    for ``(phi, f)``. Continuation proceeds outward from ``s = 0`` on both sides.
    """
    consts.require_ass0()
    s_values = sorted({float(s) for s in s_values})
    if not s_values:
        raise ValueError("no amplitudes given")
    # the discrete branch emanates from the discrete critical force
    lam0 = critical_force_numeric(consts, n_elems)
    c_half = 0.5 * coefficients_closed(consts)[2]
    L = consts.L
    w = _kernel_interior(consts, n_elems)
    Mw = mass_matrix(n_elems, L) @ w
    points: dict[float, BranchPoint] = {}

    def finish(s, path, f, it, rnorm):
        spec = constrained_spectrum(path, f, consts, n_eigs=1)
        return BranchPoint(
            s=s,
            f=f,
            path=path,
            mu_min=float(spec.eigenvalues[0]),
            energy_gap=energy_gap(path, consts, f),
            gradient_norm=rnorm,
            iterations=it,
        )

    if 0.0 in s_values:
        points[0.0] = finish(0.0, CardanPath.zeros(n_elems, L), lam0, 0, 0.0)

    for side in (1.0, -1.0):
        ordered = sorted((s for s in s_values if s * side > 0), key=abs)
        hist = [(0.0, np.zeros_like(w), lam0)]
        last_good = 0.0
        for s in ordered:
            s_prev, x_prev, f_prev = hist[-1]
            if len(hist) == 1:
                x0, f0 = s * w, lam0 + c_half * s**2
            else:
                s_pp, _, f_pp = hist[-2]
                x0 = x_prev * (s / s_prev)
                slope = (f_prev - f_pp) / (s_prev**2 - s_pp**2)
                f0 = f_prev + slope * (s**2 - s_prev**2)
            try:
                path, f, it, rnorm = _branch_newton(x0, f0, s, w, Mw, consts, n_elems, tol, max_iter)
            except (SolverError, ChartError) as exc:
                raise ContinuationError(f"continuation failed at s = {s:g}: {exc}", last_good) from exc
            log.debug("branch s=%g f=%.12g iterations=%d", s, f, it)
            points[s] = finish(s, path, f, it, rnorm)
            hist.append((s, path.interior, f))
            last_good = s
    return [points[s] for s in s_values]


def random_smooth_fields(rng: np.random.Generator, n_elems: int, length: float, n_modes: int = 4) -> np.ndarray:
    """Random interior field from a few clamped sine modes per component."""
    t = np.linspace(0.0, length, n_elems + 1)[1:-1]
    modes = np.sin(np.pi * np.outer(t, np.arange(1, n_modes + 1)) / length)
    coef = rng.standard_normal((n_modes, 3)) / np.arange(1, n_modes + 1)[:, None]
    return (modes @ coef).reshape(-1)


def _polish(path: CardanPath, f: float, consts: ElasticConstants, steps: int = 2) -> np.ndarray:
    # converged Newton iterates near a nearly singular Hessian are only accurate to
    # |grad| / mu_min; a couple of extra steps bring them to round-off
    x = path.interior
    for _ in range(steps):
        p = CardanPath.from_interior(x, path.length)
        x = x - spl.spsolve(hessian(p, f, consts).tocsc(), gradient(p, f, consts))
    return x


def count_stationary(
    consts: ElasticConstants,
    f: float,
    radius: float,
    n_seeds: int,
    n_elems: int = 128,
    seed: int = 42,
    tol: float = DEFAULT_TOL,
    dedup: float = 1e-6,
) -> list[CardanPath]:
    """Distinct stationary points within a ``W^{1,2}`` ball around the straight rod.

    Newton is started from the straight rod, from ``+-`` a multiple of ``w*`` at half the
    radius, and from ``n_seeds`` random smooth fields inside the ball.
    """
    L = consts.L
    rng = np.random.default_rng(seed)
    w = _kernel_interior(consts, n_elems)
    wn = h1_norm(w, n_elems, L)
    seeds = [np.zeros_like(w), 0.5 * radius * w / wn, -0.5 * radius * w / wn]
    for _ in range(n_seeds):
        x = random_smooth_fields(rng, n_elems, L)
        x *= radius * rng.uniform() ** (1.0 / 3.0) / h1_norm(x, n_elems, L)
        seeds.append(x)
    A = mass_matrix(n_elems, L) + stiffness_matrix(n_elems, L)

    found: list[CardanPath] = []
    for x in seeds:
        try:
            sol, _ = newton_solve(CardanPath.from_interior(x, L), f, consts, tol=tol, classify_result=False)
        except (SolverError, ChartError):
            continue
        y = _polish(sol, f, consts)
        sol = CardanPath.from_interior(y, L)
        if np.sqrt(y @ (A @ y)) >= radius:
            continue
        if all(np.sqrt(max((y - z.interior) @ (A @ (y - z.interior)), 0.0)) > dedup for z in found):
            found.append(sol)
    return found

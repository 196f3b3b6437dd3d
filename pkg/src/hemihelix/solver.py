"""Newton root finding and modified-Newton minimization of the discrete energy."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .rod_model import CardanPath, ChartError, ElasticConstants, energy_cardan
from .spectral import constrained_spectrum, smallest_eigenpair, solve_banded
from .variational import gradient, hessian

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 50
DEGENERACY_REL = 1e-8
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 40
POLISH_STEPS = 3
# length (max-norm, radians) of the first trial step along negative curvature
ESCAPE_STEP = 0.1


class SolverError(RuntimeError):
    pass


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_gradient_norm: float
    classification: str
    mu_min: float
    energy_history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("energy_history")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def hessian_scale(H: sp.spmatrix, h: float) -> float:
    """Upper bound on |mu| for ``H x = mu M x``; the consistent mass is >= h/3."""
    return 3.0 * float(abs(H).sum(axis=1).max()) / h


def classify(path: CardanPath, f: float, consts: ElasticConstants) -> tuple[str, float]:
    H = hessian(path, f, consts)
    mu = float(constrained_spectrum(path, f, consts, n_eigs=1).eigenvalues[0])
    tol = DEGENERACY_REL * hessian_scale(H, path.h)
    if mu > tol:
        return "strict-min", mu
    if mu < -tol:
        return "saddle", mu
    return "degenerate", mu


def _newton_step(H: sp.spmatrix, g: np.ndarray) -> np.ndarray:
    try:
        step = solve_banded(H, -g)
    except (la.LinAlgError, ValueError):
        step = None
    if step is None or not np.all(np.isfinite(step)):
        # one regularized retry
        n = H.shape[0]
        reg = 1e-8 * max(1.0, float(abs(H).max()))
        try:
            step = solve_banded(H + reg * sp.identity(n), -g)
        except (la.LinAlgError, ValueError) as exc:
            raise SolverError("singular Newton system, regularized retry failed") from exc
        if not np.all(np.isfinite(step)):
            raise SolverError("singular Newton system, regularized retry failed")
    return step


def newton_solve(
    seed: CardanPath,
    f: float,
    consts: ElasticConstants,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    classify_result: bool = True,
) -> tuple[CardanPath, SolveReport]:
    """Stationary point of the energy near ``seed`` (any Morse index).

    Steps are damped only when the full step leaves the chart or increases the
    gradient norm by more than a factor of ten. Once ``|grad| < tol``, up to
    ``POLISH_STEPS`` further steps are taken until the step itself is below
    ``10 tol``; near a singular Hessian the gradient alone underestimates the error.
    """
    L = seed.length
    x = seed.interior
    path = seed
    g = gradient(path, f, consts)
    gnorm = float(np.abs(g).max()) if g.size else 0.0
    last_step = np.inf
    it = polish = 0
    while gnorm >= tol or (last_step > 10.0 * tol and polish < POLISH_STEPS and gnorm > 0.0):
        if it >= max_iter:
            raise SolverError(f"Newton did not converge in {max_iter} iterations (|grad| = {gnorm:.3g})")
        polishing = gnorm < tol
        step = _newton_step(hessian(path, f, consts), g)
        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            try:
                trial = CardanPath.from_interior(x + t * step, L)
            except ChartError:
                t *= BACKTRACK
                continue
            g_trial = gradient(trial, f, consts)
            gn_trial = float(np.abs(g_trial).max())
            if np.isfinite(gn_trial) and gn_trial < 10.0 * gnorm + tol:
                break
            t *= BACKTRACK
        else:
            raise ChartError("Newton iterate cannot stay inside the Cardan chart")
        if polishing and gn_trial >= tol:
            break
        polish += polishing
        last_step = float(np.abs(t * step).max())
        x = x + t * step
        path, g, gnorm = trial, g_trial, gn_trial
        it += 1
    if classify_result:
        label, mu = classify(path, f, consts)
    else:
        label, mu = "unclassified", float("nan")
    return path, SolveReport(True, it, gnorm, label, mu)


def minimize(
    seed: CardanPath,
    f: float,
    consts: ElasticConstants,
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
) -> tuple[CardanPath, SolveReport]:
    """Local minimizer by Newton with eigenvalue-shift modification and Armijo backtracking.

    A stationary point with negative curvature is left along the lowest eigenvector.
    """
    L = seed.length
    path = seed
    x = seed.interior
    energy = energy_cardan(path, f, consts)
    history = [energy]
    g = gradient(path, f, consts)
    gnorm = float(np.abs(g).max())
    it = 0
    n = x.size
    while True:
        H = hessian(path, f, consts)
        lam, vec = smallest_eigenpair(H)
        scale = float(abs(H).sum(axis=1).max())
        negative = lam < -1e-12 * scale
        if gnorm < tol and not negative:
            break
        if it >= max_iter:
            raise SolverError(f"minimization did not converge in {max_iter} iterations (|grad| = {gnorm:.3g})")
        if gnorm < tol:
            # saddle: quadratic model along the lowest mode decreases in both directions
            step = ESCAPE_STEP * vec / np.abs(vec).max()
            if g @ step > 0:
                step = -step
            slope = float(g @ step)
            curv = float(step @ (H @ step))
        else:
            if lam <= 1e-12 * scale:
                delta = max(1e-8, -1.5 * lam)
                H = H + delta * sp.identity(n, format="csr")
            step = _newton_step(H, g)
            slope = float(g @ step)
            if slope >= 0:
                step, slope = -g, -float(g @ g)
            curv = 0.0
        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            try:
                trial = CardanPath.from_interior(x + t * step, L)
                e_trial = energy_cardan(trial, f, consts)
            except ChartError:
                t *= BACKTRACK
                continue
            if e_trial <= energy + ARMIJO_C * (t * slope + 0.5 * t * t * curv):
                break
            t *= BACKTRACK
        else:
            if gnorm < tol:
                break  # negative curvature below what the energy can resolve
            # at round-off level the energy cannot resolve descent; accept a pure Newton
            # step only if it reduces the gradient
            trial = CardanPath.from_interior(x + step, L)
            g_trial = gradient(trial, f, consts)
            e_trial = energy_cardan(trial, f, consts)
            if float(np.abs(g_trial).max()) >= gnorm or e_trial > energy + 1e-12 * abs(energy):
                raise SolverError(f"line search failed at |grad| = {gnorm:.3g}")
            t = 1.0
        x = x + t * step
        path = trial
        energy = e_trial
        history.append(e_trial)
        g = gradient(path, f, consts)
        gnorm = float(np.abs(g).max())
        it += 1
    label, mu = classify(path, f, consts)
    return path, SolveReport(True, it, gnorm, label, mu, history)

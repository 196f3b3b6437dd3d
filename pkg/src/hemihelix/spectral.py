"""Smallest eigenpairs of the energy Hessian, plain and against the L2 mass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .rod_model import CardanPath, ElasticConstants
from .variational import hessian, mass_matrix

DENSE_LIMIT = 3100
EIG_RESIDUAL_TOL = 1e-8
BANDWIDTH = 5


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    modes: np.ndarray  # columns, normalized to unit L2 norm
    residuals: np.ndarray


def to_banded(matrix: sp.spmatrix, bw: int = BANDWIDTH) -> np.ndarray:
    """General banded storage ``ab[bw + i - j, j] = a[i, j]`` for :func:`scipy.linalg.solve_banded`."""
    dia = sp.dia_matrix(matrix)
    n = matrix.shape[0]
    ab = np.zeros((2 * bw + 1, n))
    for off, row in zip(dia.offsets, dia.data):
        if abs(off) > bw:
            if np.any(row):
                raise ValueError(f"matrix has entries outside bandwidth {bw}")
            continue
        ab[bw - off] += row
    return ab


def solve_banded(matrix: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    return la.solve_banded((BANDWIDTH, BANDWIDTH), to_banded(matrix), rhs, check_finite=False)


def smallest_eigenvalue(matrix: sp.spmatrix) -> float:
    """Smallest standard eigenvalue of a symmetric banded matrix.

    By Sylvester's law its sign equals that of the smallest eigenvalue against
    any positive definite mass.
    """
    ab = to_banded(matrix)[: BANDWIDTH + 1]  # upper storage
    w = la.eig_banded(ab, lower=False, eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0])


def smallest_eigenpair(matrix: sp.spmatrix) -> tuple[float, np.ndarray]:
    ab = to_banded(matrix)[: BANDWIDTH + 1]
    w, v = la.eig_banded(ab, lower=False, select="i", select_range=(0, 0))
    return float(w[0]), v[:, 0]


def generalized_eigs(H: sp.spmatrix, M: sp.spmatrix, n_eigs: int, shift: float = 0.0) -> SpectralResult:
    n = H.shape[0]
    n_eigs = min(n_eigs, n)
    if n <= DENSE_LIMIT:
        try:
            vals, vecs = la.eigh(H.toarray(), M.toarray(), subset_by_index=[0, n_eigs - 1])
        except la.LinAlgError as exc:
            raise EigenError(f"dense generalized eigensolver failed for n={n}: {exc}") from exc
    else:
        try:
            vals, vecs = spl.eigsh(H.tocsc(), k=n_eigs, M=M.tocsc(), sigma=shift, which="LM")
        except (spl.ArpackError, RuntimeError) as exc:
            raise EigenError(f"shift-invert eigensolver failed for n={n}, shift={shift}: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    vecs = vecs / norms
    res = np.linalg.norm(H @ vecs - (M @ vecs) * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    if np.any(res > EIG_RESIDUAL_TOL):
        raise EigenError(f"eigenpair residuals {res.max():.3g} exceed {EIG_RESIDUAL_TOL}")
    return SpectralResult(eigenvalues=vals, modes=vecs, residuals=res)


def constrained_spectrum(path: CardanPath, f: float, consts: ElasticConstants, n_eigs: int = 4) -> SpectralResult:
    """Smallest eigenpairs of ``H x = mu M x``; ``mu > 0`` means positive second variation."""
    H = hessian(path, f, consts)
    M = mass_matrix(path.n_elems, path.length)
    return generalized_eigs(H, M, n_eigs)

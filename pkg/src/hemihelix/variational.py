"""First and second variations of the discrete Cardan-angle energy.

Unknowns are the interior nodal angles, flattened node-major: entry ``3 * (i - 1) + c``
holds component ``c`` of node ``i`` for ``i = 1 .. N - 1``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .rod_model import GAUSS_TAU, GAUSS_W, CardanPath, ElasticConstants, quadrature_points


def integrand_derivatives(u, xi, f, consts: ElasticConstants):
    """Gradient and Hessian blocks of the energy density.

    Returns ``(g_u, g_xi, g_uu, g_uxi, g_xixi)`` where ``g_uxi[..., i, j]`` is
    ``d^2 g / du_i dxi_j``.
    """
    u = np.asarray(u, dtype=float)
    xi = np.broadcast_to(np.asarray(xi, dtype=float), u.shape)
    c12, c13, c23, k = consts.c12, consts.c13, consts.c23, consts.k
    s2, c2 = np.sin(u[..., 1]), np.cos(u[..., 1])
    s3, c3 = np.sin(u[..., 2]), np.cos(u[..., 2])
    x1, x2, x3 = xi[..., 0], xi[..., 1], xi[..., 2]
    zero = np.zeros_like(s2)
    one = np.ones_like(s2)

    # g = c12/2 P^2 + c13/2 Q^2 + c23/2 S^2 - f cos u2 cos u3
    P = x1 * s2 + x3
    Q = x1 * c2 * s3 - x2 * c3 + k
    S = x1 * c2 * c3 + x2 * s3

    P_x = np.stack([s2, zero, one], axis=-1)
    P_u = np.stack([zero, x1 * c2, zero], axis=-1)
    Q_x = np.stack([c2 * s3, -c3, zero], axis=-1)
    Q_u = np.stack([zero, -x1 * s2 * s3, S], axis=-1)
    S_x = np.stack([c2 * c3, s3, zero], axis=-1)
    S_u = np.stack([zero, -x1 * s2 * c3, -(Q - k)], axis=-1)

    g_xi = c12 * P[..., None] * P_x + c13 * Q[..., None] * Q_x + c23 * S[..., None] * S_x
    g_u = (
        c12 * P[..., None] * P_u
        + c13 * Q[..., None] * Q_u
        + c23 * S[..., None] * S_u
        + f * np.stack([zero, s2 * c3, c2 * s3], axis=-1)
    )

    def outer(a, b):
        return a[..., :, None] * b[..., None, :]

    shape = u.shape[:-1] + (3, 3)
    # second derivatives of P, Q, S; only nonzero entries are set
    P_uu = np.zeros(shape)
    P_uu[..., 1, 1] = -x1 * s2
    P_ux = np.zeros(shape)
    P_ux[..., 1, 0] = c2
    Q_uu = np.zeros(shape)
    Q_uu[..., 1, 1] = -x1 * c2 * s3
    Q_uu[..., 1, 2] = Q_uu[..., 2, 1] = -x1 * s2 * c3
    Q_uu[..., 2, 2] = -x1 * c2 * s3 + x2 * c3
    Q_ux = np.zeros(shape)
    Q_ux[..., 1, 0] = -s2 * s3
    Q_ux[..., 2, 0] = c2 * c3
    Q_ux[..., 2, 1] = s3
    S_uu = np.zeros(shape)
    S_uu[..., 1, 1] = -x1 * c2 * c3
    S_uu[..., 1, 2] = S_uu[..., 2, 1] = x1 * s2 * s3
    S_uu[..., 2, 2] = -x1 * c2 * c3 - x2 * s3
    S_ux = np.zeros(shape)
    S_ux[..., 1, 0] = -s2 * c3
    S_ux[..., 2, 0] = -c2 * s3
    S_ux[..., 2, 1] = c3

    V_uu = np.zeros(shape)
    V_uu[..., 1, 1] = f * c2 * c3
    V_uu[..., 1, 2] = V_uu[..., 2, 1] = -f * s2 * s3
    V_uu[..., 2, 2] = f * c2 * c3

    P, Q, S = P[..., None, None], Q[..., None, None], S[..., None, None]
    g_uu = (
        c12 * (outer(P_u, P_u) + P * P_uu)
        + c13 * (outer(Q_u, Q_u) + Q * Q_uu)
        + c23 * (outer(S_u, S_u) + S * S_uu)
        + V_uu
    )
    g_ux = (
        c12 * (outer(P_u, P_x) + P * P_ux)
        + c13 * (outer(Q_u, Q_x) + Q * Q_ux)
        + c23 * (outer(S_u, S_x) + S * S_ux)
    )
    g_xx = c12 * outer(P_x, P_x) + c13 * outer(Q_x, Q_x) + c23 * outer(S_x, S_x)
    return g_u, g_xi, g_uu, g_ux, g_xx


def _scatter_vector(local: np.ndarray) -> np.ndarray:
    """Sum per-element ``(N, 2, 3)`` nodal contributions into interior unknowns."""
    n = local.shape[0]
    full = np.zeros((n + 1, 3))
    full[:-1] += local[:, 0]
    full[1:] += local[:, 1]
    return full[1:-1].reshape(-1)


def gradient(path: CardanPath, f: float, consts: ElasticConstants) -> np.ndarray:
    """Exact derivative of :func:`energy_cardan` with respect to interior nodal angles."""
    u, xi = quadrature_points(path)
    g_u, g_xi, *_ = integrand_derivatives(u, xi[:, None, :], f, consts)
    h = path.h
    w = h * GAUSS_W[None, :, None]
    local = np.empty((path.n_elems, 2, 3))
    local[:, 0] = np.sum(w * (g_u * (1.0 - GAUSS_TAU)[None, :, None] - g_xi / h), axis=1)
    local[:, 1] = np.sum(w * (g_u * GAUSS_TAU[None, :, None] + g_xi / h), axis=1)
    return _scatter_vector(local)


def force_derivative(path: CardanPath, consts: ElasticConstants) -> np.ndarray:
    """Derivative of :func:`gradient` with respect to the force."""
    u, _ = quadrature_points(path)
    s2, c2 = np.sin(u[..., 1]), np.cos(u[..., 1])
    s3, c3 = np.sin(u[..., 2]), np.cos(u[..., 2])
    dg_u = np.stack([np.zeros_like(s2), s2 * c3, c2 * s3], axis=-1)
    w = path.h * GAUSS_W[None, :, None]
    local = np.empty((path.n_elems, 2, 3))
    local[:, 0] = np.sum(w * dg_u * (1.0 - GAUSS_TAU)[None, :, None], axis=1)
    local[:, 1] = np.sum(w * dg_u * GAUSS_TAU[None, :, None], axis=1)
    return _scatter_vector(local)


def _assemble_blocks(blocks: np.ndarray) -> sp.csr_matrix:
    """Assemble per-element ``(N, 6, 6)`` matrices; boundary rows and columns dropped."""
    n = blocks.shape[0]
    dof = 3 * (n + 1)
    idx = 3 * np.arange(n)[:, None] + np.arange(6)[None, :]
    rows = np.broadcast_to(idx[:, :, None], blocks.shape).reshape(-1)
    cols = np.broadcast_to(idx[:, None, :], blocks.shape).reshape(-1)
    full = sp.coo_matrix((blocks.reshape(-1), (rows, cols)), shape=(dof, dof)).tocsr()
    return full[3:-3, 3:-3].tocsr()


def _element_matrices(w, g_uu, g_ux, g_xx, h):
    # shape functions at the Gauss points: N_a (2 points x 2 nodes) and dN_a
    shp = np.stack([1.0 - GAUSS_TAU, GAUSS_TAU], axis=-1)
    dshp = np.array([-1.0, 1.0]) / h
    n = g_uu.shape[0]
    blocks = np.zeros((n, 2, 3, 2, 3))
    for q in range(2):
        for a in range(2):
            for b in range(2):
                blk = (
                    shp[q, a] * shp[q, b] * g_uu[:, q]
                    + shp[q, a] * dshp[b] * g_ux[:, q]
                    + dshp[a] * shp[q, b] * np.swapaxes(g_ux[:, q], -1, -2)
                    + dshp[a] * dshp[b] * g_xx[:, q]
                )
                blocks[:, a, :, b, :] += w[q] * blk
    return blocks.reshape(n, 6, 6)


def hessian(path: CardanPath, f: float, consts: ElasticConstants) -> sp.csr_matrix:
    """Exact second derivative of the discrete energy (block tridiagonal)."""
    u, xi = quadrature_points(path)
    _, _, g_uu, g_ux, g_xx = integrand_derivatives(u, xi[:, None, :], f, consts)
    blocks = _element_matrices(path.h * GAUSS_W, g_uu, g_ux, g_xx, path.h)
    blocks = 0.5 * (blocks + np.swapaxes(blocks, 1, 2))
    return _assemble_blocks(blocks)


def mass_matrix(n_elems: int, length: float) -> sp.csr_matrix:
    """Consistent P1 mass for each of the three components."""
    h = length / n_elems
    m = n_elems - 1
    scalar = sp.diags(
        [np.full(m - 1, h / 6.0), np.full(m, 4.0 * h / 6.0), np.full(m - 1, h / 6.0)], [-1, 0, 1]
    )
    return sp.kron(scalar, sp.identity(3), format="csr")


def stiffness_matrix(n_elems: int, length: float) -> sp.csr_matrix:
    """P1 Dirichlet stiffness ``int w' . v'`` for each component."""
    h = length / n_elems
    m = n_elems - 1
    scalar = sp.diags([np.full(m - 1, -1.0 / h), np.full(m, 2.0 / h), np.full(m - 1, -1.0 / h)], [-1, 0, 1])
    return sp.kron(scalar, sp.identity(3), format="csr")


def l2_inner(x: np.ndarray, y: np.ndarray, n_elems: int, length: float) -> float:
    return float(x @ (mass_matrix(n_elems, length) @ y))


def h1_norm(x: np.ndarray, n_elems: int, length: float) -> float:
    """Discrete ``W^{1,2}`` norm of interior unknowns."""
    A = mass_matrix(n_elems, length) + stiffness_matrix(n_elems, length)
    return float(np.sqrt(max(x @ (A @ x), 0.0)))


def _nodal_rates(values: np.ndarray, h: float) -> np.ndarray:
    rates = np.empty_like(values)
    rates[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    # one-sided end stencil with the same leading error (h^2 v'''/6) as the central one,
    # so differencing the fluxes again stays second order next to the boundary
    rates[0] = (-4.0 * values[0] + 7.0 * values[1] - 4.0 * values[2] + values[3]) / (2.0 * h)
    rates[-1] = (4.0 * values[-1] - 7.0 * values[-2] + 4.0 * values[-3] - values[-4]) / (2.0 * h)
    return rates


def el_residual_strong(path: CardanPath, f: float, consts: ElasticConstants) -> np.ndarray:
    """Finite-difference value of ``(grad_xi g)' - grad_u g`` at interior nodes, shape ``(N-1, 3)``.

    Approximates ``-gradient / h``.
    """
    if path.n_elems < 8:
        raise ValueError("strong residual needs at least 8 elements")
    h = path.h
    v = path.values
    g_u, g_xi, *_ = integrand_derivatives(v, _nodal_rates(v, h), f, consts)
    return (g_xi[2:] - g_xi[:-2]) / (2.0 * h) - g_u[1:-1]


def linearized_identity(f: float, n_elems: int, consts: ElasticConstants) -> sp.csr_matrix:
    """Central-difference matrix of the linearized operator at the straight rod, Hessian sign.

    Acting on sampled ``w`` it returns ``-(C w'' + c13 k (w3' e1 - w1' e3) - f (w2 e2 + w3 e3))``
    at interior nodes.
    """
    if n_elems < 8:
        raise ValueError("need at least 8 elements")
    h = consts.L / n_elems
    m = n_elems - 1
    lap = sp.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h**2
    d1 = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1]) / (2.0 * h)
    eye = sp.identity(m)

    def unit(i, j):
        e = np.zeros((3, 3))
        e[i, j] = 1.0
        return sp.csr_matrix(e)

    ck = consts.c13 * consts.k
    op = (
        sp.kron(lap, sp.csr_matrix(consts.stiffness))
        + ck * sp.kron(d1, unit(0, 2))
        - ck * sp.kron(d1, unit(2, 0))
        - f * sp.kron(eye, unit(1, 1) + unit(2, 2))
    )
    return (-op).tocsr()


def export_coo(matrix: sp.spmatrix, path) -> None:
    """Write ``row col value`` lines (0-based) for external inspection."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")

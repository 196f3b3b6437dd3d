"""Kinematics and reduced energy of a clamped Kirchhoff rod with intrinsic curvature.

Frames are parametrized near the identity by Cardan angles ``(alpha, beta, gamma)``.
All functions broadcast over leading axes; trailing axes carry the angle triple
(``(..., 3)``) or the frame (``(..., 3, 3)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial.transform import Rotation

# nodes with |phi_2| >= pi/2 - CHART_MARGIN are rejected (gimbal lock)
CHART_MARGIN = 1e-3
# rotation_to_cardan only accepts matrices with ||R - I||_inf below this
DELTA_CHART = 0.5
ORTHO_TOL = 1e-10

# Gauss-Legendre 2-point rule on the reference element [0, 1]
GAUSS_TAU = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])
GAUSS_W = np.array([0.5, 0.5])


class ChartError(ValueError):
    """Angles or frames lie outside the Cardan chart around the identity."""


class FrameError(ValueError):
    """A frame is not a proper rotation matrix, or the clamping is violated."""


class ModelAssumptionError(ValueError):
    """The constants do not produce a positive critical force."""


@dataclass(frozen=True)
class ElasticConstants:
    c12: float
    c13: float
    c23: float
    k: float
    L: float

    def __post_init__(self):
        for name in ("c12", "c13", "c23", "L"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")
        if not math.isfinite(self.k):
            raise ValueError(f"k must be finite, got {self.k!r}")

    @property
    def stiffness(self) -> np.ndarray:
        """Diagonal stiffness acting on (phi_1', phi_2', phi_3') at the identity."""
        return np.diag([self.c23, self.c13, self.c12])

    @property
    def ass0_margin(self) -> float:
        return (self.c13 * self.k) ** 2 / self.c23 - 4.0 * math.pi**2 * self.c12 / self.L**2

    @property
    def ass0_holds(self) -> bool:
        return self.ass0_margin > 0.0

    def require_ass0(self) -> None:
        if not self.ass0_holds:
            raise ModelAssumptionError(
                "(c13*k)^2/c23 - 4*pi^2*c12/L^2 must be positive; "
                f"got {self.ass0_margin!r} for {self}"
            )

    def as_dict(self) -> dict[str, float]:
        return {"c12": self.c12, "c13": self.c13, "c23": self.c23, "k": self.k, "L": self.L}


# Bi-strip constants of the hemihelix example; their length is unspecified
# and fixed to 1 here.
BISTRIP_CONSTANTS = ElasticConstants(c12=4.0848, c13=0.0065, c23=0.0087, k=375.0, L=1.0)
BISTRIP_QUOTED_FCRIT = 687.0
TOY_CONSTANTS = ElasticConstants(c12=1.0, c13=1.0, c23=1.0, k=2.0, L=2.0 * math.pi)


def _check_angles(values: np.ndarray, margin: float = CHART_MARGIN) -> None:
    if not np.all(np.isfinite(values)):
        raise ChartError("angles must be finite")
    beta = np.abs(values[..., 1])
    if beta.size and beta.max() >= math.pi / 2 - margin:
        raise ChartError(
            f"|phi_2| = {beta.max():.6g} reaches the gimbal-lock margin pi/2 - {margin:g}"
        )


@dataclass(frozen=True)
class CardanPath:
    """Nodal Cardan angles on the uniform grid ``t_i = i L / N`` with clamped ends."""

    values: np.ndarray
    length: float
    n_elems: int = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 3:
            raise ValueError(f"values must have shape (N+1, 3), got {values.shape}")
        n = values.shape[0] - 1
        if n < 4:
            raise ValueError(f"need at least 4 elements, got {n}")
        if not (self.length > 0):
            raise ValueError("length must be positive")
        if np.any(values[0] != 0.0) or np.any(values[-1] != 0.0):
            if max(np.abs(values[0]).max(), np.abs(values[-1]).max()) > 1e-14:
                raise ChartError("Cardan path must vanish at both ends (clamped)")
            values[0] = 0.0
            values[-1] = 0.0
        _check_angles(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n_elems", n)

    @classmethod
    def zeros(cls, n_elems: int, length: float) -> CardanPath:
        return cls(np.zeros((n_elems + 1, 3)), length)

    @classmethod
    def from_interior(cls, interior: np.ndarray, length: float) -> CardanPath:
        interior = np.asarray(interior, dtype=float).reshape(-1, 3)
        values = np.zeros((interior.shape[0] + 2, 3))
        values[1:-1] = interior
        return cls(values, length)

    @property
    def h(self) -> float:
        return self.length / self.n_elems

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_elems + 1)

    @property
    def interior(self) -> np.ndarray:
        """Flattened interior unknowns, ordered node-major (3 per node)."""
        return self.values[1:-1].reshape(-1).copy()

    def reflect(self) -> CardanPath:
        """Image under (phi_1, phi_2, phi_3) -> (-phi_1, phi_2, -phi_3)."""
        return CardanPath(self.values * REFLECTION, self.length)

    def scaled(self, s: float) -> CardanPath:
        return CardanPath(s * self.values, self.length)


REFLECTION = np.array([-1.0, 1.0, -1.0])


@dataclass(frozen=True)
class RotationPath:
    frames: np.ndarray
    length: float
    n_elems: int = field(init=False)

    def __post_init__(self):
        frames = np.array(self.frames, dtype=float)
        if frames.ndim != 3 or frames.shape[1:] != (3, 3):
            raise FrameError(f"frames must have shape (N+1, 3, 3), got {frames.shape}")
        if not (self.length > 0):
            raise ValueError("length must be positive")
        gram = np.einsum("nji,njk->nik", frames, frames) - np.eye(3)
        if np.abs(gram).max() > ORTHO_TOL:
            raise FrameError(f"frames are not orthogonal (max defect {np.abs(gram).max():.3g})")
        if np.any(np.linalg.det(frames) <= 0):
            raise FrameError("frames must have positive determinant")
        eye = np.eye(3)
        if max(np.abs(frames[0] - eye).max(), np.abs(frames[-1] - eye).max()) > ORTHO_TOL:
            raise FrameError("frames must equal the identity at both ends (clamped)")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "n_elems", frames.shape[0] - 1)

    @property
    def h(self) -> float:
        return self.length / self.n_elems

    @classmethod
    def from_cardan(cls, path: CardanPath) -> RotationPath:
        return cls(cardan_to_rotation(path.values), path.length)


class AngularStrain(NamedTuple):
    a12: np.ndarray
    a13: np.ndarray
    a23: np.ndarray


def cardan_to_rotation(phi) -> np.ndarray:
    """Frame ``G(alpha, beta, gamma)``; broadcasts over leading axes."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != 3:
        raise ValueError("angle triples must have a trailing axis of length 3")
    if not np.all(np.isfinite(phi)):
        raise ChartError("angles must be finite")
    if phi.size and np.abs(phi[..., 1]).max() >= math.pi / 2:
        raise ChartError("|beta| must be below pi/2")
    ca, cb, cg = np.cos(phi[..., 0]), np.cos(phi[..., 1]), np.cos(phi[..., 2])
    sa, sb, sg = np.sin(phi[..., 0]), np.sin(phi[..., 1]), np.sin(phi[..., 2])
    out = np.empty(phi.shape[:-1] + (3, 3))
    out[..., 0, 0] = cb * cg
    out[..., 0, 1] = -cb * sg
    out[..., 0, 2] = sb
    out[..., 1, 0] = sa * sb * cg + ca * sg
    out[..., 1, 1] = ca * cg - sa * sb * sg
    out[..., 1, 2] = -sa * cb
    out[..., 2, 0] = sa * sg - ca * sb * cg
    out[..., 2, 1] = sa * cg + ca * sb * sg
    out[..., 2, 2] = ca * cb
    return out


def rotation_to_cardan(R) -> np.ndarray:
    """Inverse chart on the neighbourhood ``||R - I||_inf < DELTA_CHART``."""
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise ValueError("expected 3x3 matrices")
    gram = np.einsum("...ji,...jk->...ik", R, R) - np.eye(3)
    if np.abs(gram).max() > ORTHO_TOL or np.any(np.linalg.det(R) <= 0):
        raise FrameError("input is not a rotation matrix")
    dist = np.abs(R - np.eye(3)).max(axis=(-2, -1))
    if np.any(dist >= DELTA_CHART):
        raise ChartError(f"||R - I||_inf = {dist.max():.4g} exceeds the chart radius {DELTA_CHART}")
    beta = np.arcsin(np.clip(R[..., 0, 2], -1.0, 1.0))
    alpha = np.arctan2(-R[..., 1, 2], R[..., 2, 2])
    gamma = np.arctan2(-R[..., 0, 1], R[..., 0, 0])
    return np.stack([alpha, beta, gamma], axis=-1)


def angular_strain(u, xi) -> AngularStrain:
    """Entries of ``G(phi)^T G(phi)'`` at angles ``u`` with rates ``xi``."""
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s2, c2 = np.sin(u[..., 1]), np.cos(u[..., 1])
    s3, c3 = np.sin(u[..., 2]), np.cos(u[..., 2])
    x1, x2, x3 = xi[..., 0], xi[..., 1], xi[..., 2]
    return AngularStrain(
        a12=-x1 * s2 - x3,
        a13=-x1 * c2 * s3 + x2 * c3,
        a23=-x1 * c2 * c3 - x2 * s3,
    )


def integrand(u, xi, f: float, consts: ElasticConstants):
    """Energy density of the rod in Cardan angles, ``g_f(u, xi)``."""
    a = angular_strain(u, xi)
    u = np.asarray(u, dtype=float)
    return (
        0.5 * consts.c12 * a.a12**2
        + 0.5 * consts.c13 * (a.a13 - consts.k) ** 2
        + 0.5 * consts.c23 * a.a23**2
        - f * np.cos(u[..., 1]) * np.cos(u[..., 2])
    )


def quadrature_points(path: CardanPath) -> tuple[np.ndarray, np.ndarray]:
    """Angles ``(N, 2, 3)`` at the Gauss points and element rates ``(N, 3)``."""
    v = path.values
    left, right = v[:-1], v[1:]
    u = left[:, None, :] * (1.0 - GAUSS_TAU)[None, :, None] + right[:, None, :] * GAUSS_TAU[None, :, None]
    xi = (right - left) / path.h
    return u, xi


def energy_cardan(path: CardanPath, f: float, consts: ElasticConstants) -> float:
    u, xi = quadrature_points(path)
    g = integrand(u, xi[:, None, :], f, consts)
    return float(path.h * np.sum(g * GAUSS_W))


def _rotvec_to_strain(omega: np.ndarray) -> AngularStrain:
    # hat(omega)[0,1] = -omega_3, [0,2] = omega_2, [1,2] = -omega_1
    return AngularStrain(a12=-omega[..., 2], a13=omega[..., 1], a23=-omega[..., 0])


def energy_rotation(path: RotationPath, f: float, consts: ElasticConstants) -> float:
    """Frame form of the energy.

    Per element the strain is the constant ``log(R_i^T R_{i+1}) / h``; the load
    term is integrated with 2-point Gauss along the geodesic between frames.
    """
    R = path.frames
    h = path.h
    rel = np.einsum("nji,njk->nik", R[:-1], R[1:])
    omega = Rotation.from_matrix(rel).as_rotvec()
    a = _rotvec_to_strain(omega / h)
    bend = 0.5 * (consts.c12 * a.a12**2 + consts.c13 * (a.a13 - consts.k) ** 2 + consts.c23 * a.a23**2)
    load = np.zeros(len(rel))
    for tau, w in zip(GAUSS_TAU, GAUSS_W):
        mid = np.einsum("nij,njk->nik", R[:-1], Rotation.from_rotvec(tau * omega).as_matrix())
        load += w * mid[:, 0, 0]
    return float(h * np.sum(bend - f * load))


def load_integral(path: RotationPath) -> float:
    """``int_0^L <e1, R e1> dt`` with the same rule as :func:`energy_rotation`."""
    R = path.frames
    rel = np.einsum("nji,njk->nik", R[:-1], R[1:])
    omega = Rotation.from_matrix(rel).as_rotvec()
    total = 0.0
    for tau, w in zip(GAUSS_TAU, GAUSS_W):
        mid = np.einsum("nij,njk->nik", R[:-1], Rotation.from_rotvec(tau * omega).as_matrix())
        total += w * mid[:, 0, 0].sum()
    return float(path.h * total)


def centerline(path: CardanPath | RotationPath) -> np.ndarray:
    """Cumulative trapezoid integral of the tangent ``R e1``; starts at the origin."""
    frames = path.frames if isinstance(path, RotationPath) else cardan_to_rotation(path.values)
    tangent = frames[:, :, 0]
    pts = np.zeros_like(tangent)
    pts[1:] = np.cumsum(0.5 * path.h * (tangent[:-1] + tangent[1:]), axis=0)
    return pts

"""Interior Neumann problem via the single-layer representation.

Solves (-1/2 I + K*) phi = g for a boundary traction g and evaluates the
displacement u = S[phi] at interior points.  The discrete operator has a
three-dimensional null space (the rigid-motion directions carried over to the
adjoint side); the solve deflates it with a truncated-SVD pseudoinverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import QuadratureGrid, assemble_K_adjoint, discrete_weight
from .geometry import Curve, LameParams
from .kernels import kelvin

COMPAT_TOL = 1e-8
NULL_TOL = 1e-6
NEAR_BOUNDARY_FRACTION = 0.05


class CompatibilityError(ValueError):
    pass


class NullSpaceError(RuntimeError):
    pass


def rigid_motion_samples(curve: Curve, t):
    """Component-blocked samples of the three rigid motions e1, e2, rotation."""
    pts = curve.point(t)
    n = len(np.atleast_1d(t))
    e1 = np.concatenate([np.ones(n), np.zeros(n)])
    e2 = np.concatenate([np.zeros(n), np.ones(n)])
    rot = np.concatenate([-pts[:, 1], pts[:, 0]])
    return [e1, e2, rot]


def linear_field_traction(params: LameParams, A, normals):
    """Traction of u(x) = A x: lambda tr(sym A) n + 2 mu (sym A) n."""
    A = np.asarray(A, dtype=float)
    symA = 0.5 * (A + A.T)
    return params.lam * np.trace(symA) * normals + 2.0 * params.mu * (normals @ symA.T)


@dataclass(frozen=True)
class TractionData:
    """Boundary traction samples plus rigid-motion compatibility residuals."""

    values: np.ndarray  # (n, 2)
    compat_residuals: tuple

    @staticmethod
    def from_samples(curve: Curve, grid: QuadratureGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n, 2):
            raise ValueError(f"traction samples must be ({grid.n}, 2), got {values.shape}")
        w = discrete_weight(curve, grid, "scalar")
        w2 = np.concatenate([w, w])
        gvec = np.concatenate([values[:, 0], values[:, 1]])
        gnorm = float(np.sqrt(np.sum(w2 * gvec**2)))
        residuals = []
        for r in rigid_motion_samples(curve, grid.t):
            rnorm = float(np.sqrt(np.sum(w2 * r**2)))
            inner = float(np.sum(w2 * gvec * r))
            residuals.append(abs(inner) / max(gnorm * rnorm, 1e-300))
        return TractionData(values=values, compat_residuals=tuple(residuals))


@dataclass(frozen=True)
class NeumannSolution:
    density: np.ndarray  # (n, 2)
    dropped_singular_values: tuple
    compat_residuals: tuple
    curve: Curve
    params: LameParams
    grid: QuadratureGrid
    meta: dict = field(default_factory=dict)

    def evaluate(self, points):
        """Displacement at interior points; flags points too close to the boundary."""
        return evaluate_single_layer(self.curve, self.params, self.grid,
                                     self.density, points)


def solve_neumann(curve: Curve, params: LameParams, g: TractionData,
                  grid: QuadratureGrid, compat_tol=COMPAT_TOL,
                  null_tol=NULL_TOL) -> NeumannSolution:
    """Solve the interior traction problem by the boundary integral equation."""
    bad = [i for i, r in enumerate(g.compat_residuals) if r >= compat_tol]
    if bad:
        raise CompatibilityError(
            "traction data is incompatible with rigid motions: residuals "
            + ", ".join(f"r{i}={g.compat_residuals[i]:.3e}" for i in bad)
        )
    n = grid.n
    Ks = assemble_K_adjoint(curve, params, grid).mat
    A = -0.5 * np.eye(2 * n) + Ks
    U, sv, Vt = np.linalg.svd(A)
    small = np.nonzero(sv < null_tol * sv[0])[0]
    if len(small) != 3:
        raise NullSpaceError(
            f"expected a 3-dimensional discrete null space, found {len(small)} singular "
            f"values below {null_tol:.1e} * sigma_max (discretization too coarse?)"
        )
    keep = np.arange(2 * n - 3)
    gvec = np.concatenate([g.values[:, 0], g.values[:, 1]])
    phi = Vt[keep].T @ ((U[:, keep].T @ gvec) / sv[keep])
    return NeumannSolution(
        density=np.stack([phi[:n], phi[n:]], axis=1),
        dropped_singular_values=tuple(float(s) for s in sv[-3:]),
        compat_residuals=g.compat_residuals,
        curve=curve,
        params=params,
        grid=grid,
    )


def evaluate_single_layer(curve: Curve, params: LameParams, grid: QuadratureGrid,
                          density, points):
    """u(x) = sum_j w |q'(t_j)| Gamma(x - q(t_j)) phi_j at off-boundary points.

    Returns (values (m, 2), near_boundary flags (m,)): plain trapezoid sums
    degrade near the boundary, so points closer than 5% of the diameter are
    flagged rather than corrected.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nodes = curve.point(grid.t)
    w = discrete_weight(curve, grid, "scalar")
    density = np.asarray(density)
    diameter = float(np.max(np.linalg.norm(nodes[:, None, :] - nodes[None, ::16, :], axis=2)))
    out = np.empty((len(pts), 2))
    near = np.empty(len(pts), dtype=bool)
    for i, x in enumerate(pts):
        z = x[None, :] - nodes
        dist = float(np.min(np.linalg.norm(z, axis=1)))
        near[i] = dist < NEAR_BOUNDARY_FRACTION * diameter
        G = kelvin(params, z)
        out[i] = np.einsum("j,jab,jb->a", w, G, density)
    return out, near


def lame_residual(params: LameParams, u_eval, points, h=1e-4):
    """|| mu lap(u) + (lam + mu) grad(div u) || via 5-point stencils at probes."""
    lam, mu = params.lam, params.mu
    worst = 0.0
    for x in np.atleast_2d(points):
        stencil = {}
        for dx in (-2, -1, 0, 1, 2):
            for dy in (-2, -1, 0, 1, 2):
                if abs(dx) + abs(dy) <= 2:
                    stencil[(dx, dy)] = u_eval(x + h * np.array([dx, dy]))
        lap = (
            stencil[(1, 0)] + stencil[(-1, 0)] + stencil[(0, 1)] + stencil[(0, -1)]
            - 4.0 * stencil[(0, 0)]
        ) / h**2
        dxx = (stencil[(1, 0)] - 2 * stencil[(0, 0)] + stencil[(-1, 0)]) / h**2
        dyy = (stencil[(0, 1)] - 2 * stencil[(0, 0)] + stencil[(0, -1)]) / h**2
        dxy = (
            stencil[(1, 1)] - stencil[(1, -1)] - stencil[(-1, 1)] + stencil[(-1, -1)]
        ) / (4 * h**2)
        grad_div = np.array(
            [dxx[0] + dxy[1], dxy[0] + dyy[1]]
        )
        res = mu * lap + (lam + mu) * grad_div
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def gauge_fixed_error(u_num, u_exact, points):
    """Max error after removing the best-fit rigid motion from the difference."""
    pts = np.atleast_2d(points)
    m = len(pts)
    diff = np.asarray(u_num) - np.asarray(u_exact)
    basis = np.zeros((2 * m, 3))
    basis[:m, 0] = 1.0
    basis[m:, 1] = 1.0
    basis[:m, 2] = -pts[:, 1]
    basis[m:, 2] = pts[:, 0]
    dvec = np.concatenate([diff[:, 0], diff[:, 1]])
    coef, *_ = np.linalg.lstsq(basis, dvec, rcond=None)
    return float(np.max(np.abs(dvec - basis @ coef)))

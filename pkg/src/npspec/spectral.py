"""Eigen-decomposition, cluster reports, Riesz projectors, and compactness diagnostics.

All spectra here belong to dense Nystrom matrices.  Reported eigenvalues are
real (the operators are self-adjoint in the single-layer inner product);
spurious imaginary parts beyond tolerance abort with a refinement hint.
Norms are discrete L^2 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import OperatorMatrix, PTransform, asmatrix
from .geometry import Curve
from .kernels import TWO_PI

#: eigenvalue pair planted on the two unresolvable Nyquist directions so the
#: spectrum pipeline can drop them deterministically
_SENTINEL = 12345.0

DEFAULT_IM_TOL = 1e-8
DEFAULT_MATCH_TOL = 1e-9
DEFAULT_GAP_TOL = 1e-6
#: relative shell around the outlier radius: values indistinguishable from the
#: radius boundary (e.g. the rigid-motion 1/2 when k0 = 1/4) go to outliers
RADIUS_SHELL = 1e-6


class EigenDecompositionError(RuntimeError):
    pass


class SpectralGapError(RuntimeError):
    pass


def eigen_decompose(op, with_vectors=False):
    """All eigenvalues of a dense matrix, sorted by (real, imag)."""
    mat = asmatrix(op)
    tag = op.tag if isinstance(op, OperatorMatrix) else "matrix"
    try:
        if with_vectors:
            vals, vecs = sla.eig(mat)
        else:
            vals = sla.eigvals(mat)
    except sla.LinAlgError as exc:
        raise EigenDecompositionError(
            f"eigensolver failed for operator '{tag}' of shape {mat.shape}: {exc}"
        ) from exc
    order = np.lexsort((vals.imag, vals.real))
    if with_vectors:
        return vals[order], vecs[:, order]
    return vals[order]


def spectral_norm_estimate(mat, iters=30):
    """Deterministic power iteration on M^T M."""
    mat = asmatrix(mat)
    v = np.ones(mat.shape[1]) / np.sqrt(mat.shape[1])
    for _ in range(iters):
        w = mat.T @ (mat @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.sqrt(np.linalg.norm(mat.T @ (mat @ v))))


def realify(eigs, im_tol_abs, hint=""):
    """Collapse conjugate noise to real parts; abort on genuine imaginary parts."""
    eigs = np.asarray(eigs)
    worst = np.max(np.abs(eigs.imag)) if eigs.size else 0.0
    if worst > im_tol_abs:
        raise EigenDecompositionError(
            f"eigenvalues have imaginary parts up to {worst:.3e} (tol {im_tol_abs:.3e}); "
            f"refine the grid{hint}"
        )
    return np.sort(eigs.real)


def nyquist_deflated(K: OperatorMatrix):
    """Matrix with the two per-component Nyquist directions planted on a sentinel.

    The grid cannot represent the conjugate function of the Nyquist mode (its
    multiplier is zeroed), so the two corresponding eigenvalues of K_N are
    discretization artifacts pinned near zero.  Replacing those two invariant
    directions with a far-away sentinel eigenvalue lets callers drop them.
    """
    mat = asmatrix(K)
    n = mat.shape[0] // 2
    v = np.zeros((2 * n, 2))
    base = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) / np.sqrt(n)
    v[:n, 0] = base
    v[n:, 1] = base
    B = np.eye(2 * n) - v @ v.T
    return B @ mat @ B + _SENTINEL * (v @ v.T)


def resolvable_eigenvalues(K: OperatorMatrix, im_tol=DEFAULT_IM_TOL):
    """Real eigenvalues of K_N restricted to the resolvable (non-Nyquist) band."""
    mat = nyquist_deflated(K)
    norm = spectral_norm_estimate(asmatrix(K))
    vals = eigen_decompose(mat)
    keep = np.abs(vals.real - _SENTINEL) > 1.0
    vals = vals[keep]
    if len(vals) != mat.shape[0] - 2:
        raise EigenDecompositionError("sentinel deflation did not isolate exactly two modes")
    real = realify(vals, im_tol * max(norm, 1e-300), hint=" (n -> 2n)")
    return real, im_tol * norm


# cluster reports ---------------------------------------------------------------


@dataclass(frozen=True)
class ClusterMember:
    j: int
    value: float
    dist: float
    resolved: bool


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues split into the two k0 clusters plus outliers."""

    eigenvalues: np.ndarray
    k0: float
    plus: tuple
    minus: tuple
    outliers: tuple
    resolved_count: int
    im_tol: float
    n: int = 0
    curve_spec: str = ""
    lam: float = float("nan")
    mu: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def resolved_plus(self):
        return _resolved_prefix(self.plus)

    @property
    def resolved_minus(self):
        return _resolved_prefix(self.minus)

    def to_json_dict(self):
        return {
            "schema_version": 1,
            "curve": self.curve_spec,
            "lambda": self.lam,
            "mu": self.mu,
            "k0": self.k0,
            "n": self.n,
            "eigenvalues": [[float(v), 0.0] for v in self.eigenvalues],
            "plus": [{"j": m.j, "lambda": m.value, "dist": m.dist} for m in self.plus],
            "minus": [{"j": m.j, "lambda": m.value, "dist": m.dist} for m in self.minus],
            "outliers": [float(v) for v in self.outliers],
            "resolved_count": self.resolved_count,
            "resolved_plus": self.resolved_plus,
            "resolved_minus": self.resolved_minus,
            "im_tol": self.im_tol,
            **self.meta,
        }

    def to_csv_lines(self):
        lines = ["j,lambda_plus,dist_plus,lambda_minus,dist_minus"]
        for i in range(max(len(self.plus), len(self.minus))):
            p = self.plus[i] if i < len(self.plus) else None
            m = self.minus[i] if i < len(self.minus) else None
            lines.append(
                f"{i + 1},"
                + (f"{p.value!r},{p.dist!r}" if p else ",")
                + ","
                + (f"{m.value!r},{m.dist!r}" if m else ",")
            )
        return lines


def _resolved_prefix(members):
    count = 0
    for m in members:
        if not m.resolved:
            break
        count += 1
    return count


def cluster_pm_k0(eigs, k0, outlier_radius=None, resolved_reference=None,
                  match_tol=DEFAULT_MATCH_TOL, im_tol=0.0, **meta):
    """Assign real eigenvalues to the +k0 / -k0 clusters or to outliers.

    A value joins the plus cluster when it is strictly closer to +k0 than to
    -k0 and within the outlier radius (default k0); symmetrically for minus.
    Values within a relative shell of the radius boundary are treated as
    outliers: the rigid-motion eigenvalue 1/2 sits exactly on the boundary
    when k0 = 1/4 and must not enter a cluster by rounding luck.

    resolved_reference: eigenvalues of a finer-grid run; a member is resolved
    when it matches one to match_tol.
    """
    eigs = np.sort(np.asarray(eigs, dtype=float))
    radius = k0 if outlier_radius is None else outlier_radius
    shell = RADIUS_SHELL * radius

    def resolved(v):
        if resolved_reference is None:
            return True
        return bool(np.min(np.abs(np.asarray(resolved_reference) - v)) < match_tol)

    plus_vals, minus_vals, outliers = [], [], []
    for v in eigs:
        dp, dm = abs(v - k0), abs(v + k0)
        side = None
        if dp < dm and dp < radius - shell:
            side = "plus"
        elif dm < dp and dm < radius - shell:
            side = "minus"
        if side == "plus":
            plus_vals.append(v)
        elif side == "minus":
            minus_vals.append(v)
        else:
            outliers.append(v)

    def build(vals, center):
        d = np.abs(np.asarray(vals) - center)
        # decreasing distance; ties broken by eigenvalue ascending
        order = sorted(range(len(vals)), key=lambda i: (-d[i], vals[i]))
        return tuple(
            ClusterMember(j=rank + 1, value=float(vals[i]), dist=float(d[i]),
                          resolved=resolved(vals[i]))
            for rank, i in enumerate(order)
        )

    plus = build(plus_vals, k0)
    minus = build(minus_vals, -k0)
    total_resolved = sum(m.resolved for m in plus) + sum(m.resolved for m in minus) + sum(
        resolved(v) for v in outliers
    )
    return SpectrumReport(
        eigenvalues=eigs,
        k0=k0,
        plus=plus,
        minus=minus,
        outliers=tuple(float(v) for v in outliers),
        resolved_count=int(total_resolved),
        im_tol=float(im_tol),
        **meta,
    )


def decay_levels(members, degenerate_tol=1e-12):
    """Collapse a cluster's distances into decay levels (index m, level distance).

    Cluster eigenvalues approach +-k0 in nearly degenerate pairs; the decay
    laws are stated per distinct level, so distances are paired by rank with
    the pairing offset (a possible leading singleton) chosen to minimize the
    within-pair log-spread.  Levels stop at the first unresolved or degenerate
    member.  Returns a list of (m, geometric-mean distance).
    """
    ds = []
    for m in members:
        if not m.resolved or m.dist <= degenerate_tol:
            break
        ds.append(m.dist)
    if len(ds) < 2:
        return [(i + 1, d) for i, d in enumerate(ds)]

    def cost(offset):
        c, k = 0.0, offset
        while k + 1 < len(ds):
            c += abs(np.log(ds[k] / ds[k + 1]))
            k += 2
        return c

    offset = 0 if cost(0) <= cost(1) else 1
    levels = []
    if offset == 1:
        levels.append(ds[0])
    k = offset
    while k < len(ds):
        if k + 1 < len(ds):
            levels.append(float(np.sqrt(ds[k] * ds[k + 1])))
        else:
            levels.append(ds[k])
        k += 2
    return [(i + 1, d) for i, d in enumerate(levels)]


# Riesz projectors ----------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    center: float
    radius: float
    nodes: int


@dataclass(frozen=True)
class ProjectorPair:
    E_plus: np.ndarray
    E_minus: np.ndarray
    contour_plus: Contour
    contour_minus: Contour
    residuals: dict


def _split_spectrum(eigs, report):
    """Partition all eigenvalues into the two contour groups.

    Values between the clusters (e.g. near-zero strays) attach to the side of
    the widest gap so both contours keep a working clearance.
    """
    eigs = np.sort(np.asarray(eigs))
    if not report.plus or not report.minus:
        raise SpectralGapError("cannot build contours: a cluster is empty")
    lo_plus = min(m.value for m in report.plus)
    hi_minus = max(m.value for m in report.minus)
    middle = eigs[(eigs > hi_minus) & (eigs < lo_plus)]
    fence = np.concatenate([[hi_minus], middle, [lo_plus]])
    gaps = np.diff(fence)
    cut = int(np.argmax(gaps))
    threshold = 0.5 * (fence[cut] + fence[cut + 1])
    return eigs[eigs > threshold], eigs[eigs <= threshold]


def _contour_for(inside, outside, gap_tol, nodes):
    c = 0.5 * (inside.min() + inside.max())
    r_in = 0.5 * (inside.max() - inside.min())
    r_out = np.min(np.abs(outside - c)) if outside.size else 10.0 * (r_in + 1.0)
    if r_out - r_in < gap_tol:
        raise SpectralGapError(
            f"spectral gap {r_out - r_in:.3e} below tolerance {gap_tol:.3e}"
        )
    radius = float(np.sqrt(max(r_in, 0.05 * r_out) * r_out))
    return Contour(center=float(c), radius=radius, nodes=nodes)


def _contour_integral(mat, contour):
    n = mat.shape[0]
    eye = np.eye(n)
    acc = np.zeros((n, n), dtype=complex)
    theta = TWO_PI * np.arange(contour.nodes) / contour.nodes
    for th in theta:
        lam = contour.center + contour.radius * np.exp(1j * th)
        try:
            resolvent = np.linalg.solve(lam * eye - mat, eye)
        except np.linalg.LinAlgError as exc:
            raise SpectralGapError(f"resolvent solve failed at contour node {lam:.6g}") from exc
        acc += resolvent * (1j * contour.radius * np.exp(1j * th))
    return np.real(acc * (TWO_PI / contour.nodes) / (2j * np.pi))


def riesz_projectors(K, report: SpectrumReport, contour_nodes=64,
                     gap_tol=DEFAULT_GAP_TOL) -> ProjectorPair:
    """Spectral projectors onto the two cluster groups by contour quadrature.

    Contours are circles chosen from the data: centered on the enclosed group
    with radius the geometric mean of the inner spread and the distance to the
    excluded group, which balances the resolvent's analyticity margin on both
    sides.  The trapezoid rule on the circle then converges exponentially in
    the node count.
    """
    mat = asmatrix(K)
    eigs = realify(eigen_decompose(mat), max(report.im_tol, 1e-6))
    plus_side, minus_side = _split_spectrum(eigs, report)
    if plus_side.size == 0 or minus_side.size == 0:
        raise SpectralGapError("one contour group is empty")
    cp = _contour_for(plus_side, minus_side, gap_tol, contour_nodes)
    cm = _contour_for(minus_side, plus_side, gap_tol, contour_nodes)
    # covering condition: every eigenvalue strictly inside exactly one circle
    for v in eigs:
        in_p = abs(v - cp.center) < cp.radius
        in_m = abs(v - cm.center) < cm.radius
        if in_p == in_m:
            raise SpectralGapError(f"eigenvalue {v:.6g} is not enclosed by exactly one contour")
    Ep = _contour_integral(mat, cp)
    Em = _contour_integral(mat, cm)
    eye = np.eye(mat.shape[0])
    residuals = {
        "idempotency_plus": float(np.linalg.norm(Ep @ Ep - Ep, 2)),
        "idempotency_minus": float(np.linalg.norm(Em @ Em - Em, 2)),
        "completeness": float(np.linalg.norm(Ep + Em - eye, 2)),
        "commutation_plus": float(np.linalg.norm(Ep @ mat - mat @ Ep, 2)),
        "commutation_minus": float(np.linalg.norm(Em @ mat - mat @ Em, 2)),
        "trace_sum": float(np.trace(Ep) + np.trace(Em)),
    }
    return ProjectorPair(E_plus=Ep, E_minus=Em, contour_plus=cp, contour_minus=cm,
                         residuals=residuals)


# compactness diagnostics ----------------------------------------------------------


def compact_defect(K, k0):
    """Singular values of K_N^2 - k0^2 I (descending) with a fitted log slope."""
    mat = asmatrix(K)
    defect = mat @ mat - k0**2 * np.eye(mat.shape[0])
    sv = np.linalg.svd(defect, compute_uv=False)
    slope = None
    if sv[0] > 0:
        keep = np.nonzero(sv > 1e-12 * sv[0])[0]
        if len(keep) >= 4:
            m = keep[: max(4, len(keep))] + 1.0
            y = np.log(sv[keep])
            A = np.vstack([np.ones_like(m), m]).T
            coef, *_ = np.linalg.lstsq(A, y, rcond=None)
            slope = float(coef[1])
    return sv, slope


def conjugate_by_P(K, ptrans: PTransform, curve: Curve | None = None):
    """Q_N = k0 diag(I, -I) - P^{-1} K_N P, with its singular value profile.

    Uses the exact matrix inverse of P (P is nonsingular; the stored block
    companion inverts it only off the defect modes).  The two per-component
    Nyquist directions are projected out of Q_N: the transform is defective
    there and their content is a discretization artifact.  Exact only when the
    curve is parametrized by a disk scaling; otherwise flagged approximate.
    """
    mat = asmatrix(K)
    if isinstance(K, OperatorMatrix) and (K.lam is not None) and (K.mu is not None):
        from .geometry import LameParams

        k0 = LameParams(K.lam, K.mu).k0
    else:
        raise ValueError("conjugate_by_P needs an OperatorMatrix carrying material metadata")
    P = asmatrix(ptrans.P)
    n = mat.shape[0] // 2
    Kc = np.linalg.solve(P, mat @ P)
    D = np.zeros((2 * n, 2 * n))
    D[:n, :n] = np.eye(n)
    D[n:, n:] = -np.eye(n)
    Q = k0 * D - Kc
    v = np.zeros((2 * n, 2))
    base = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) / np.sqrt(n)
    v[:n, 0] = base
    v[n:, 1] = base
    B = np.eye(2 * n) - v @ v.T
    Q = B @ Q @ B
    sv = np.linalg.svd(Q, compute_uv=False)
    approximate = not (curve is not None and curve.riemann_parametrization)
    return Q, sv, approximate


def band_projector(n, m):
    """Projector onto Fourier modes |k| < m on the n-point grid."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    mask = (np.abs(k) < m).astype(float)
    F = np.fft.fft(np.eye(n), axis=0)
    return np.real(np.fft.ifft(mask[:, None] * F, axis=0))


def truncate_fourier(Q, m):
    """Band-limit the output index to |k| < m per component.

    Returns (Q_m, tail_norm) with Q_m = F_m Q of rank at most 2(2m - 1) and
    tail_norm the largest singular value of Q - Q_m.
    """
    Q = asmatrix(Q)
    n = Q.shape[0] // 2
    if m >= n // 2:
        raise ValueError(f"truncation order m={m} must be below n/2={n // 2}")
    if m < 1:
        raise ValueError("truncation order must be positive")
    F = band_projector(n, m)
    Fm = np.zeros((2 * n, 2 * n))
    Fm[:n, :n] = F
    Fm[n:, n:] = F
    Qm = Fm @ Q
    tail = float(np.linalg.norm(Q - Qm, 2))
    return Qm, tail


# kernel Fourier tables -------------------------------------------------------------


def _roots_of_unity_hilo(n):
    """e^{-2 pi i m / n} as (hi, lo) clongdouble pairs, lo the rounding residual.

    The lo parts matter: coherent 1-ulp table errors otherwise floor the
    coefficient table near 3e-18, too high to resolve analytic decay over the
    diagnostic band.  Requires mpmath; falls back to lo = 0 without it.
    """
    ld = np.longdouble
    hi = np.empty(n, dtype=np.clongdouble)
    lo = np.zeros(n, dtype=np.clongdouble)
    try:
        import mpmath as mp
    except ImportError:
        ang = (ld(2) * ld(np.pi) * np.arange(n).astype(ld)) / ld(n)
        return (np.cos(ang) - 1j * np.sin(ang)).astype(np.clongdouble), lo

    with mp.workdps(40):
        for i in range(n):
            c = mp.cos(-2 * mp.pi * i / n)
            s = mp.sin(-2 * mp.pi * i / n)
            ch, cl = _mp_to_longdouble_pair(c, mp)
            sh, sl = _mp_to_longdouble_pair(s, mp)
            hi[i] = np.clongdouble(ch) + 1j * np.clongdouble(sh)
            lo[i] = np.clongdouble(cl) + 1j * np.clongdouble(sl)
    return hi, lo


def _mp_to_longdouble_pair(x, mp):
    hi = np.longdouble(mp.nstr(x, 36))
    h64 = np.float64(hi)
    l64 = np.float64(hi - np.longdouble(h64))
    residual = x - mp.mpf(float(h64)) - mp.mpf(float(l64))
    return hi, np.longdouble(mp.nstr(residual, 36))


def _tree_sum(x, axis=0):
    while x.shape[axis] > 1:
        m = x.shape[axis]
        if m % 2 == 1:
            pad = [(0, 0)] * x.ndim
            pad[axis] = (0, 1)
            x = np.pad(x, pad)
            m += 1
        lo = [slice(None)] * x.ndim
        hi = [slice(None)] * x.ndim
        lo[axis] = slice(0, m, 2)
        hi[axis] = slice(1, m, 2)
        x = x[tuple(lo)] + x[tuple(hi)]
    return np.take(x, 0, axis=axis)


def _param_kernel_samples(curve, grid, selector, dtype):
    """Kernel samples T[t_i, s_j] (list of scalar fields) for the selector."""
    ld = dtype
    n = grid.n
    t = (ld(2) * ld(np.pi) * np.arange(n).astype(ld)) / ld(n)
    q, q1, q2 = curve.eval_complex(t, dtype=ld)
    dif = q[:, None] - q[None, :]
    np.fill_diagonal(dif, 1.0)
    two_pi = ld(2) * ld(np.pi)
    if selector == "A":
        T = np.imag(q1[:, None] / dif) / two_pi
        np.fill_diagonal(T, np.imag(q2 / q1) / (2 * two_pi))
        return [T]
    if selector == "K22":
        scal = np.imag(q1[None, :] / (-dif)) / two_pi
        np.fill_diagonal(scal, np.imag(q2 / q1) / (2 * two_pi))
        u = dif.copy()
        np.fill_diagonal(u, q1)
        u = u / np.abs(u)
        ux, uy = np.real(u), np.imag(u)
        return [2 * scal * ux * ux, 2 * scal * ux * uy, 2 * scal * uy * uy]
    if selector == "K1-remainder":
        k1 = np.real(np.conj(q1)[None, :] * dif) / (two_pi * np.abs(dif) ** 2)
        uu = t[:, None] - t[None, :]
        mask = ~np.eye(n, dtype=bool)
        out = np.zeros_like(k1)
        out[mask] = k1[mask] - np.cos(uu[mask] / 2) / (2 * two_pi * np.sin(uu[mask] / 2))
        diag = -np.real(np.conj(q1) * q2) / (2 * two_pi * np.abs(q1) ** 2)
        np.fill_diagonal(out, diag)
        return [out]
    raise ValueError(f"unknown kernel selector '{selector}' (expect A, K22, K1-remainder)")


def kernel_fourier_decay(curve, selector, grid, extended=True):
    """Table of max_s |a_k(s)| for the t-direction Fourier coefficients.

    a_k(s) = (1/2pi) int T(t, s) e^{-ikt} dt, computed as the grid DFT over t
    with diagonal limits included, maximized over s and matrix entries.  The
    extended path evaluates everything in long double with an exactly reduced
    phase table and pairwise summation, reaching a noise floor near 3e-19.
    Returns (k values from -n/2 to n/2-1, max|a_k| as float64).
    """
    n = grid.n
    ks = np.arange(-n // 2, n // 2)
    if not extended:
        fields = _param_kernel_samples(curve, grid, selector, np.float64)
        best = np.zeros(n)
        for T in fields:
            mags = np.abs(np.fft.fft(T, axis=0)) / n  # row k mod n holds frequency k
            vals = np.array([np.max(mags[k % n]) for k in ks])
            best = np.maximum(best, vals)
        return ks, best

    ld = np.longdouble
    fields = _param_kernel_samples(curve, grid, selector, ld)
    w_hi, w_lo = _roots_of_unity_hilo(n)
    idx_all = np.arange(n)
    best = np.zeros(n)
    for T in fields:
        Tc = T.astype(np.clongdouble)
        for i, k in enumerate(ks):
            idx = (k * idx_all) % n
            terms = w_hi[idx][:, None] * Tc + w_lo[idx][:, None] * Tc
            col = _tree_sum(terms, axis=0) / ld(n)
            best[i] = max(best[i], float(np.max(np.abs(col))))
    return ks, best


def fit_tail_slope(ms, tails, floor_factor=10.0):
    """Least-squares slope of log tail vs m, excluding the rounding floor.

    Values within floor_factor of the smallest observed tail (or of machine
    zero relative to the largest) are beyond the measurement: one is kept as
    the terminal point, the rest dropped.
    """
    ms = np.asarray(ms, dtype=float)
    tails = np.asarray(tails, dtype=float)
    floor = max(np.min(tails), 1e-14 * np.max(tails)) * floor_factor
    keep = tails > floor
    if np.any(~keep):
        first_floor = int(np.argmax(~keep))
        keep[:first_floor] = True
        keep[first_floor] = True
        keep[first_floor + 1:] = False
    ms, tails = ms[keep], tails[keep]
    if len(ms) < 2 or np.any(tails <= 0):
        raise ValueError("not enough decaying tail values to fit a slope")
    A = np.vstack([np.ones_like(ms), ms]).T
    coef, *_ = np.linalg.lstsq(A, np.log(tails), rcond=None)
    return float(coef[1])


def fit_fourier_slope(ks, table, kmin=5, kmax=40, auto_floor=False):
    """Least-squares slope of log max|a_k| against |k| over the band.

    With auto_floor the fit discards modes at the numerical noise plateau,
    estimated from the top of the frequency range.
    """
    ks = np.asarray(ks)
    vals = np.asarray(table, dtype=float)
    per_abs = {}
    for k, v in zip(ks, vals):
        a = abs(int(k))
        per_abs[a] = max(per_abs.get(a, 0.0), v)
    abscissa = np.array(sorted(a for a in per_abs if kmin <= a <= kmax))
    y = np.array([per_abs[a] for a in abscissa])
    if auto_floor:
        top = sorted(a for a in per_abs)[-max(4, len(per_abs) // 10):]
        floor = 30.0 * max(np.median([per_abs[a] for a in top]), 1e-300)
        keep = y > floor
        if np.sum(keep) >= 4:
            abscissa, y = abscissa[keep], y[keep]
    if len(abscissa) < 2 or np.any(y <= 0):
        raise ValueError("not enough positive coefficients in the fit band")
    A = np.vstack([np.ones_like(abscissa, dtype=float), abscissa]).T
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    return float(coef[1])

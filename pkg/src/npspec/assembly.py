"""Dense Nystrom matrices on equispaced periodic grids.

Density layout for vector operators is component-blocked: a density f is the
length-2n vector [f1 at all nodes, f2 at all nodes], so the block operators
built from the scalar circle Hilbert transform are literal 2x2 block matrices.

Kernel convention: the boundary operator is assembled from the transpose of
the column-wise conormal derivative of the fundamental matrix.  That is the
convention under which rigid motions are eigenfunctions with eigenvalue 1/2,
the traction jump of the single layer is the weighted adjoint, and the block
identity with the circle Hilbert multiplier -i sgn(k) comes out with the signs
used throughout the spectral module.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import Curve, LameParams, check_curve_on_grid
from .kernels import TWO_PI, k1_smooth_diagonal

MAX_GRID = 4096
CACHE_MAGIC = b"NPSPEC01"


@dataclass(frozen=True)
class QuadratureGrid:
    """n equispaced nodes t_j = 2 pi j / n with trapezoid weight 2 pi / n."""

    n: int

    def __post_init__(self):
        if self.n % 2 != 0:
            raise ValueError(f"grid size must be even, got {self.n}")
        if not 16 <= self.n <= MAX_GRID:
            raise ValueError(f"grid size must be in [16, {MAX_GRID}], got {self.n}")

    @property
    def t(self):
        return TWO_PI * np.arange(self.n) / self.n

    @property
    def w(self):
        return TWO_PI / self.n


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator matrix plus the metadata that produced it."""

    mat: np.ndarray
    tag: str
    n: int
    kind: str  # "vector" (2n x 2n) or "scalar" (n x n)
    curve_spec: str | None = None
    lam: float | None = None
    mu: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.mat)):
            raise ValueError(f"non-finite entries in operator '{self.tag}'")
        expect = 2 * self.n if self.kind == "vector" else self.n
        if self.mat.shape != (expect, expect):
            raise ValueError(
                f"operator '{self.tag}' shape {self.mat.shape} inconsistent with n={self.n} ({self.kind})"
            )


def asmatrix(op):
    """Accept an OperatorMatrix or a bare ndarray."""
    return op.mat if isinstance(op, OperatorMatrix) else np.asarray(op)


# Fourier-multiplier circulants --------------------------------------------------


def _multiplier_matrix(mult):
    """Real matrix of inverse-DFT . diag(mult) . DFT."""
    n = len(mult)
    F = np.fft.fft(np.eye(n), axis=0)
    return np.real(np.fft.ifft(mult[:, None] * F, axis=0))


def hilbert_multipliers(n):
    """-i sgn(k) on frequencies [0..n/2-1, -n/2..-1], zero at k=0 and Nyquist."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0  # Nyquist: keeps the matrix real and skew-symmetric
    return mult


def assemble_H0(n) -> OperatorMatrix:
    """Discrete circle Hilbert transform (conjugate-function operator)."""
    if n % 2 != 0:
        raise ValueError(f"H0 needs an even grid, got n={n}")
    mat = _multiplier_matrix(hilbert_multipliers(n))
    return OperatorMatrix(mat=mat, tag="H0", n=n, kind="scalar")


def log_multipliers(n):
    """Multipliers of f -> int ln(2 e^{-1/2} |sin((t-s)/2)|) f(s) ds.

    -pi/|k| away from zero (Nyquist included via |k| = n/2); the constant
    -1/2 shifts the k = 0 value to -pi.
    """
    k = np.fft.fftfreq(n, d=1.0 / n)
    out = np.empty(n)
    out[0] = -np.pi
    out[1:] = -np.pi / np.abs(k[1:])
    return out


def assemble_log_layer(curve: Curve, grid: QuadratureGrid) -> OperatorMatrix:
    """Scalar single layer f -> int ln|q(t)-q(s)| f(s) |q'(s)| ds.

    Splits ln|q(t)-q(s)| = ln(2 e^{-1/2} |sin((t-s)/2)|) + smooth remainder;
    the first factor is applied by its exact multipliers, the remainder by the
    trapezoid rule with diagonal limit ln|q'(t)| + 1/2.
    """
    t = grid.t
    check_curve_on_grid(curve, t)
    q, q1, _ = curve.eval_complex(t)
    m = np.abs(q1)
    dif = q[:, None] - q[None, :]
    u = t[:, None] - t[None, :]
    np.fill_diagonal(dif, 1.0)
    sin_half = np.abs(2.0 * np.sin(u / 2.0))
    np.fill_diagonal(sin_half, 1.0)
    smooth = np.log(np.abs(dif) / sin_half) + 0.5
    np.fill_diagonal(smooth, np.log(m) + 0.5)
    L = _multiplier_matrix(log_multipliers(grid.n))
    mat = (L + grid.w * smooth) * m[None, :]
    return OperatorMatrix(mat=mat, tag="log_layer", n=grid.n, kind="scalar",
                          curve_spec=curve.spec_string())


# parametrized node tables -------------------------------------------------------


def _node_data(curve, grid):
    t = grid.t
    check_curve_on_grid(curve, t)
    q, q1, q2 = curve.eval_complex(t)
    return t, q, q1, q2, np.abs(q1)


def electrostatic_kernel_matrix(curve: Curve, grid: QuadratureGrid):
    """K0(q(t_i), q(t_j), n(t_j)) |q'(t_j)| with curvature diagonal limit."""
    t, q, q1, q2 = _node_data(curve, grid)[:4]
    dif = q[:, None] - q[None, :]
    np.fill_diagonal(dif, 1.0)
    A = np.imag(q1[None, :] / (-dif)) / TWO_PI
    np.fill_diagonal(A, np.imag(q2 / q1) / (2.0 * TWO_PI))
    return A


def _projector_blocks(curve, grid):
    """Entries of R(t_i, t_j) = u u^T/|u|^2, u = q(t_i)-q(t_j); diagonal u = q'."""
    _, q, q1, _, _ = _node_data(curve, grid)
    dif = q[:, None] - q[None, :]
    np.fill_diagonal(dif, q1)
    u = dif / np.abs(dif)
    ux, uy = np.real(u), np.imag(u)
    return ux * ux, ux * uy, uy * uy


def k1_smooth_matrix(curve: Curve, grid: QuadratureGrid):
    """Cotangent-subtracted smooth part of the scalar PV kernel on the grid."""
    t, q, q1, _, _ = _node_data(curve, grid)
    dif = q[:, None] - q[None, :]
    u = t[:, None] - t[None, :]
    np.fill_diagonal(dif, 1.0)
    mask = ~np.eye(grid.n, dtype=bool)
    k1 = np.real(np.conj(q1)[None, :] * dif) / (TWO_PI * np.abs(dif) ** 2)
    cot = np.zeros_like(k1)
    cot[mask] = np.cos(u[mask] / 2.0) / (2.0 * TWO_PI * np.sin(u[mask] / 2.0))
    out = k1 - cot
    np.fill_diagonal(out, k1_smooth_diagonal(curve, t))
    return out


def _t2_blocks(curve, params, grid):
    """Blocks of the smooth symmetric kernel K2(q(t),q(s),n(s)) |q'(s)|."""
    A = electrostatic_kernel_matrix(curve, grid)
    r11, r12, r22 = _projector_blocks(curve, grid)
    c1 = params.mu / (2.0 * params.mu + params.lam)
    c2 = 2.0 * (params.mu + params.lam) / (2.0 * params.mu + params.lam)
    # (x-y).n_y = -(y-x).n_y flips the sign of the electrostatic factor
    b11 = -A * (c1 + c2 * r11)
    b12 = -A * c2 * r12
    b22 = -A * (c1 + c2 * r22)
    return b11, b12, b22


def assemble_K(curve: Curve, params: LameParams, grid: QuadratureGrid) -> OperatorMatrix:
    """Elastic boundary double-layer operator, 2n x 2n.

    The smooth symmetric part uses plain trapezoid weights with exact diagonal
    limits.  The PV part is the scalar cotangent kernel, applied as the exact
    multiplier (1/2) H0 plus the trapezoid rule on the smooth remainder, placed
    in the antisymmetric block pattern.
    """
    n = grid.n
    k0 = params.k0
    Mk = 0.5 * assemble_H0(n).mat + grid.w * k1_smooth_matrix(curve, grid)
    b11, b12, b22 = _t2_blocks(curve, params, grid)
    K = np.zeros((2 * n, 2 * n))
    K[:n, :n] = -grid.w * b11
    K[:n, n:] = -2.0 * k0 * Mk - grid.w * b12
    K[n:, :n] = 2.0 * k0 * Mk - grid.w * b12
    K[n:, n:] = -grid.w * b22
    return OperatorMatrix(mat=K, tag="K", n=n, kind="vector",
                          curve_spec=curve.spec_string(), lam=params.lam, mu=params.mu)


def discrete_weight(curve: Curve, grid: QuadratureGrid, kind="vector"):
    """Diagonal of the discrete L^2(d sigma) inner product, w |q'(t_j)|."""
    m = grid.w * curve.speed(grid.t)
    return np.concatenate([m, m]) if kind == "vector" else m


def assemble_K_adjoint(curve: Curve, params: LameParams, grid: QuadratureGrid) -> OperatorMatrix:
    """Adjoint of K in the discrete L^2(d sigma) inner product: W^-1 K^T W.

    This is the Nystrom matrix of the traction-jump kernel (integration and
    evaluation roles exchanged, matrix transposed), and it satisfies the
    discrete adjoint identity exactly by construction.
    """
    K = assemble_K(curve, params, grid).mat
    wdiag = discrete_weight(curve, grid, "vector")
    mat = (K.T * wdiag[None, :]) / wdiag[:, None]
    return OperatorMatrix(mat=mat, tag="K_adjoint", n=grid.n, kind="vector",
                          curve_spec=curve.spec_string(), lam=params.lam, mu=params.mu)


def assemble_Kcal(curve: Curve, grid: QuadratureGrid) -> OperatorMatrix:
    """Electrostatic Neumann-Poincare operator, n x n scalar."""
    mat = grid.w * electrostatic_kernel_matrix(curve, grid)
    return OperatorMatrix(mat=mat, tag="Kcal", n=grid.n, kind="scalar",
                          curve_spec=curve.spec_string())


def assemble_S(curve: Curve, params: LameParams, grid: QuadratureGrid) -> OperatorMatrix:
    """Single layer of plane elasticity with spectrally accurate log quadrature."""
    n = grid.n
    log_layer = assemble_log_layer(curve, grid).mat
    m = curve.speed(grid.t)
    r11, r12, r22 = _projector_blocks(curve, grid)
    c_log = params.alpha1 / TWO_PI
    c_r = params.alpha2 / TWO_PI
    S = np.zeros((2 * n, 2 * n))
    S[:n, :n] = c_log * log_layer - c_r * grid.w * r11 * m[None, :]
    S[:n, n:] = -c_r * grid.w * r12 * m[None, :]
    S[n:, :n] = S[:n, n:]
    S[n:, n:] = c_log * log_layer - c_r * grid.w * r22 * m[None, :]
    return OperatorMatrix(mat=S, tag="S", n=n, kind="vector",
                          curve_spec=curve.spec_string(), lam=params.lam, mu=params.mu)


@dataclass(frozen=True)
class PTransform:
    """The symmetrizing transform (1/sqrt2)[I H0; H0 I] and companions.

    P is invertible as a matrix (it acts as 1/sqrt2 times the identity on the
    k = 0 and Nyquist modes where the multiplier vanishes); the stored
    approximate inverse (1/sqrt2)[I -H0; -H0 I] inverts it only off those four
    modes, and defect_norm records ||P P_approx_inv - I||_2 = 1/2.
    """

    P: OperatorMatrix
    P_approx_inv: OperatorMatrix
    defect_norm: float
    defect_rank: int


def assemble_P(grid: QuadratureGrid) -> PTransform:
    n = grid.n
    H = assemble_H0(n).mat
    eye = np.eye(n)
    s = 1.0 / np.sqrt(2.0)
    P = s * np.block([[eye, H], [H, eye]])
    Pinv = s * np.block([[eye, -H], [-H, eye]])
    defect = P @ Pinv - np.eye(2 * n)
    dnorm = np.linalg.norm(defect, 2)
    drank = int(np.sum(np.linalg.svd(defect, compute_uv=False) > 1e-12))
    return PTransform(
        P=OperatorMatrix(mat=P, tag="P", n=n, kind="vector"),
        P_approx_inv=OperatorMatrix(mat=Pinv, tag="P_approx_inv", n=n, kind="vector"),
        defect_norm=float(dnorm),
        defect_rank=drank,
    )


# binary cache --------------------------------------------------------------------


def cache_key(curve_spec, lam, mu, n, tag, code_version):
    text = f"{curve_spec}|{lam!r}|{mu!r}|{n}|{tag}|{code_version}"
    return hashlib.sha256(text.encode()).hexdigest()[:24]


def save_operator(path, op: OperatorMatrix):
    """Little-endian float64 row-major dump with a 64-byte header."""
    rows, cols = op.mat.shape
    tag = op.tag.encode()[:32]
    header = CACHE_MAGIC + struct.pack("<QQ", rows, cols) + tag.ljust(32, b"\0") + b"\0" * 8
    assert len(header) == 64
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(op.mat, dtype="<f8").tobytes())


_VECTOR_TAGS = frozenset({"K", "K_adjoint", "S", "P", "P_approx_inv"})


def load_operator(path) -> OperatorMatrix:
    with open(path, "rb") as fh:
        header = fh.read(64)
        if header[:8] != CACHE_MAGIC:
            raise ValueError(f"bad cache magic in {path}")
        rows, cols = struct.unpack("<QQ", header[8:24])
        tag = header[24:56].rstrip(b"\0").decode()
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(rows, cols).copy()
    if tag in _VECTOR_TAGS:
        n, kind = rows // 2, "vector"
    else:
        n, kind = rows, "scalar"
    return OperatorMatrix(mat=data, tag=tag, n=n, kind=kind)

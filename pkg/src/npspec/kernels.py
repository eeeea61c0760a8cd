"""Pointwise integral kernels of 2D elastostatics and their parametrized forms.

Pointwise kernels act on real 2-vectors and broadcast over leading axes.
Parametrized kernels take a curve and parameter values; they carry exact
diagonal limits so Nystrom assembly never skips the diagonal node.  Complex
arithmetic is an internal convenience of the parametrized forms only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Curve, LameParams

TWO_PI = 2.0 * np.pi


def _dot(u, v):
    return np.sum(u * v, axis=-1)


def _outer(u, v):
    return u[..., :, None] * v[..., None, :]


def _check_separated(x, y):
    if np.any(np.all(np.asarray(x) == np.asarray(y), axis=-1)):
        raise ValueError("kernel is singular at x == y")


def kelvin(params: LameParams, x) -> np.ndarray:
    """Fundamental matrix (a1/2pi) ln|x| I - (a2/2pi) x x^T / |x|^2."""
    x = np.asarray(x, dtype=float)
    r2 = _dot(x, x)
    if np.any(r2 == 0.0):
        raise ValueError("kelvin matrix is singular at x = 0")
    eye = np.eye(2)
    lead = (params.alpha1 / TWO_PI) * 0.5 * np.log(r2)
    return lead[..., None, None] * eye - (params.alpha2 / TWO_PI) * _outer(x, x) / r2[..., None, None]


def kelvin_gradient(params: LameParams, z) -> np.ndarray:
    """G[i, j, k] = d Gamma_ij / d z_k, the exact gradient of the Kelvin matrix."""
    z = np.asarray(z, dtype=float)
    r2 = _dot(z, z)[..., None, None, None]
    eye = np.eye(2)
    zi = z[..., :, None, None]
    zj = z[..., None, :, None]
    zk = z[..., None, None, :]
    term1 = (params.alpha1 / TWO_PI) * eye[..., :, :, None] * zk / r2
    term2 = (params.alpha2 / TWO_PI) * (
        (eye[..., :, None, :] * zj + eye[..., None, :, :] * zi) / r2 - 2.0 * zi * zj * zk / r2**2
    )
    return term1 - term2


def conormal_kelvin(params: LameParams, x, y, ny) -> np.ndarray:
    """Traction matrix M with M b = traction at y (normal ny) of y -> Gamma(x-y) b.

    Built from the closed-form Kelvin gradient: the field u(y) = Gamma(x-y) b has
    grad_y u = -G(x-y) contracted on b, and the traction is
    lambda (div u) n + mu (grad u + grad u^T) n.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ny = np.asarray(ny, dtype=float)
    _check_separated(x, y)
    z = x - y
    G = kelvin_gradient(params, z)  # (..., i, j, k)
    # div_y (Gamma(x-y) b)_j-column: -G[i, j, i]
    div = -np.einsum("...iji->...j", G)
    # grad_y u_i / d y_k on column j: -G[i, j, k]
    sym_n = np.einsum("...ijk,...k->...ij", G, ny) + np.einsum("...kji,...k->...ij", G, ny)
    return params.lam * _outer(ny, div) - params.mu * sym_n


def kernel_K0(x, y, ny):
    """Electrostatic double-layer kernel (1/2pi) (y-x).ny / |x-y|^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_separated(x, y)
    z = y - x
    return _dot(z, np.asarray(ny, dtype=float)) / (TWO_PI * _dot(z, z))


def kernel_K1(x, y, ny) -> np.ndarray:
    """Antisymmetric part [n (x-y)^T - (x-y) n^T] / (2pi |x-y|^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ny = np.asarray(ny, dtype=float)
    _check_separated(x, y)
    z = x - y
    r2 = _dot(z, z)
    k = (ny[..., 0] * z[..., 1] - ny[..., 1] * z[..., 0]) / (TWO_PI * r2)
    zero = np.zeros_like(k)
    return np.stack(
        (np.stack((zero, k), axis=-1), np.stack((-k, zero), axis=-1)), axis=-2
    )


def kernel_K2(params: LameParams, x, y, ny) -> np.ndarray:
    """Symmetric part; both terms carry the factor (x-y).ny.

    Note the sign: (x-y).ny is the negative of the electrostatic kernel's
    (y-x).ny, so kernel_K2 = -K0 [c1 I + c2 zz^T/|z|^2] with
    c1 = mu/(2mu+lambda), c2 = 2(mu+lambda)/(2mu+lambda).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ny = np.asarray(ny, dtype=float)
    _check_separated(x, y)
    z = x - y
    r2 = _dot(z, z)
    s = _dot(z, ny) / (TWO_PI * r2)
    c1 = params.mu / (2.0 * params.mu + params.lam)
    c2 = 2.0 * (params.mu + params.lam) / (2.0 * params.mu + params.lam)
    eye = np.eye(2)
    return c1 * s[..., None, None] * eye + c2 * (s / r2)[..., None, None] * _outer(z, z)


# parametrized kernels ----------------------------------------------------------


def param_A(curve: Curve, t, s):
    """Scalar kernel Im( q'(t) / (q(t)-q(s)) ) / (2pi), with exact diagonal.

    Equals kernel_K0(q(s), q(t), n(t)) |q'(t)|: the electrostatic kernel with
    the evaluation-slot speed factor.  At t = s the limit is Im(q''/q')/(4pi).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    qt, q1t, q2t = curve.eval_complex(t)
    qs, _, _ = curve.eval_complex(s)
    u = np.mod(t - s, TWO_PI)
    diag = np.isclose(u, 0.0, atol=1e-15) | np.isclose(u, TWO_PI, atol=1e-15)
    dif = np.where(diag, 1.0, qt - qs)
    out = np.where(diag, np.imag(q2t / q1t) / (2.0 * TWO_PI), np.imag(q1t / dif) / TWO_PI)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SplitKernelValue:
    """PV kernel split: singular_coeff * (1/4pi) cot((t-s)/2) + smooth_part."""

    singular_coeff: float
    smooth_part: object


def _k1_scalar(curve: Curve, t, s):
    """Re( conj(q'(s)) (q(t)-q(s)) ) / (2pi |q(t)-q(s)|^2), measure absorbed."""
    qt, _, _ = curve.eval_complex(t)
    qs, q1s, _ = curve.eval_complex(s)
    dif = qt - qs
    return np.real(np.conj(q1s) * dif) / (TWO_PI * np.abs(dif) ** 2)


def k1_smooth_diagonal(curve: Curve, t):
    """Diagonal limit of the cotangent-subtracted PV kernel.

    Taylor expansion of q about s gives
    k1(t,s) = 1/(2pi (t-s)) - Re(conj(q') q'')/(4pi |q'|^2) + O(t-s),
    and (1/4pi) cot((t-s)/2) = 1/(2pi (t-s)) + O(t-s), so the limit is
    -Re(conj(q') q'') / (4pi |q'|^2) = -(d/dt ln|q'|)/(4pi).
    """
    _, q1, q2 = curve.eval_complex(t)
    return -np.real(np.conj(q1) * q2) / (2.0 * TWO_PI * np.abs(q1) ** 2)


def param_K1_split(curve: Curve, t, s) -> SplitKernelValue:
    """Cotangent split of the scalar PV kernel of the antisymmetric part."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    u = np.mod(t - s, TWO_PI)
    diag = np.isclose(u, 0.0, atol=1e-15) | np.isclose(u, TWO_PI, atol=1e-15)
    if np.all(diag):
        smooth = k1_smooth_diagonal(curve, t)
    else:
        safe_s = np.where(diag, s + 1.0, s)
        off = _k1_scalar(curve, t, safe_s) - np.cos((t - safe_s) / 2.0) / (
            2.0 * TWO_PI * np.sin((t - safe_s) / 2.0)
        )
        smooth = np.where(diag, k1_smooth_diagonal(curve, t), off)
    smooth = smooth[()] if np.ndim(smooth) == 0 else smooth
    return SplitKernelValue(singular_coeff=1.0, smooth_part=smooth)


def _rank_one_projector(dif_or_dir):
    """R = u u^T / |u|^2 as a (..., 2, 2) array from a complex direction."""
    u = dif_or_dir / np.abs(dif_or_dir)
    ux, uy = np.real(u), np.imag(u)
    return np.stack(
        (
            np.stack((ux * ux, ux * uy), axis=-1),
            np.stack((ux * uy, uy * uy), axis=-1),
        ),
        axis=-2,
    )


def param_K22(curve: Curve, t, s) -> np.ndarray:
    """Rank-one kernel 2 K0(q(t),q(s)) R(t,s) |q'(s)| with exact diagonal.

    R(t,s) is the orthogonal projector onto q(t)-q(s); on the diagonal it
    becomes q' (x) q' / |q'|^2 and the scalar factor tends to 2 Im(q''/q')/(4pi).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    qt, q1t, q2t = curve.eval_complex(t)
    qs, q1s, _ = curve.eval_complex(s)
    u = np.mod(t - s, TWO_PI)
    diag = np.isclose(u, 0.0, atol=1e-15) | np.isclose(u, TWO_PI, atol=1e-15)
    dif = np.where(diag, q1t, qt - qs)
    scal = np.where(
        diag,
        np.imag(q2t / q1t) / (2.0 * TWO_PI),
        np.imag(q1s / np.where(diag, 1.0, qs - qt)) / TWO_PI,
    )
    return 2.0 * scal[..., None, None] * _rank_one_projector(dif)

"""Material constants and closed-form planar curve parametrizations.

Curves are 2*pi-periodic maps t -> q(t) into the plane with exact first and
second derivatives (no finite differences anywhere in the toolkit).  Points
are handled as complex numbers internally and exposed as real 2-vectors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

TANGENT_FLOOR = 1e-12


class CurveSpecError(ValueError):
    """Malformed curve specification string."""


class InvalidMaterialError(ValueError):
    """Lame parameters outside the admissible range."""


@dataclass(frozen=True)
class LameParams:
    """Plane-strain material constants (lambda, mu), dimensionless."""

    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidMaterialError(f"invalid material: mu must be > 0, got mu={self.mu}")
        if not 2.0 * self.mu + self.lam > 0:
            raise InvalidMaterialError(
                f"invalid material: 2*mu + lambda must be > 0, got lambda={self.lam}, mu={self.mu}"
            )

    @property
    def k0(self) -> float:
        """Spectral accumulation constant mu / (2 (2 mu + lambda))."""
        return self.mu / (2.0 * (2.0 * self.mu + self.lam))

    @property
    def alpha1(self) -> float:
        return 0.5 * (1.0 / self.mu + 1.0 / (2.0 * self.mu + self.lam))

    @property
    def alpha2(self) -> float:
        return 0.5 * (1.0 / self.mu - 1.0 / (2.0 * self.mu + self.lam))


def k0(params: LameParams) -> float:
    return params.k0


def _c2v(z):
    """Complex scalar/array -> real array with trailing axis (x, y)."""
    z = np.asarray(z)
    return np.stack((z.real, z.imag), axis=-1)


class Curve:
    """Base class for 2*pi-periodic closed curves with exact derivatives."""

    #: True only when q is the boundary restriction of a disk scaling z -> a z,
    #: the one family where the circle Hilbert transform is exact.
    riemann_parametrization = False

    #: Holder exponent k + alpha of a deliberately non-analytic family, or
    #: None for analytic curves.
    smoothness_exponent = None

    def eval_complex(self, t, dtype=np.float64):
        """Return (q, q', q'') at parameter values t as complex arrays."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    def grauert_radius(self):
        """Strip half-width of analyticity with the geometric condition, or None."""
        return None

    # real-vector conveniences -------------------------------------------------

    def point(self, t):
        return _c2v(self.eval_complex(t)[0])

    def d1(self, t):
        return _c2v(self.eval_complex(t)[1])

    def d2(self, t):
        return _c2v(self.eval_complex(t)[2])

    def speed(self, t):
        return np.abs(self.eval_complex(t)[1])

    def normal_complex(self, t):
        _, q1, _ = self.eval_complex(t)
        s = np.abs(q1)
        if np.any(s < TANGENT_FLOOR):
            raise ValueError("degenerate tangent: |q'(t)| below 1e-12")
        return -1j * q1 / s

    def normal(self, t):
        return _c2v(self.normal_complex(t))

    def __repr__(self):
        return f"<Curve {self.spec_string()}>"


@dataclass(frozen=True)
class Ellipse(Curve):
    """q(t) = a cos t + i b sin t with a >= b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise CurveSpecError(f"ellipse requires a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def riemann_parametrization(self):
        # a circle of any radius is the image of the disk under z -> a z
        return self.a == self.b

    def eval_complex(self, t, dtype=np.float64):
        t = np.asarray(t, dtype=dtype)
        a = dtype(self.a)
        b = dtype(self.b)
        ct, st = np.cos(t), np.sin(t)
        q = a * ct + 1j * b * st
        q1 = -a * st + 1j * b * ct
        q2 = -q
        return q, q1, q2

    def grauert_radius(self):
        if self.a == self.b:
            return math.inf
        return math.log((self.a + self.b) / (self.a - self.b))

    def spec_string(self):
        return f"ellipse:a={self.a:g},b={self.b:g}"


class _RadialCurve(Curve):
    """q(t) = r(t) e^{it} with r a truncated trigonometric series."""

    # subclasses fill _harmonics (int array), _cos (amplitudes), _sin
    _harmonics: np.ndarray
    _cos: np.ndarray
    _sin: np.ndarray

    def _radius_series(self, t, dtype):
        m = self._harmonics.astype(dtype)
        c = self._cos.astype(dtype)
        s = self._sin.astype(dtype)
        mt = np.multiply.outer(np.asarray(t, dtype=dtype), m)
        cmt, smt = np.cos(mt), np.sin(mt)
        r = 1.0 + cmt @ c + smt @ s
        r1 = -(smt * m) @ c + (cmt * m) @ s
        r2 = -(cmt * m * m) @ c - (smt * m * m) @ s
        return r, r1, r2

    def _check_positive_radius(self):
        t = np.linspace(0.0, 2.0 * np.pi, 8192, endpoint=False)
        r, _, _ = self._radius_series(t, np.float64)
        if np.min(r) <= 0:
            raise CurveSpecError(
                f"radius must stay positive; min r = {np.min(r):.3g} for {self.spec_string()}"
            )

    def eval_complex(self, t, dtype=np.float64):
        t = np.asarray(t, dtype=dtype)
        r, r1, r2 = self._radius_series(t, dtype)
        e = np.cos(t) + 1j * np.sin(t)
        q = r * e
        q1 = (r1 + 1j * r) * e
        q2 = (r2 + 2j * r1 - r) * e
        return q, q1, q2


class TrigRadius(_RadialCurve):
    """Radius 1 plus a finite list of (harmonic, cos amp, sin amp) terms."""

    def __init__(self, coeffs):
        coeffs = [(int(m), float(c), float(s)) for (m, c, s) in coeffs]
        if not coeffs:
            raise CurveSpecError("trig curve needs at least one harmonic term")
        for m, _, _ in coeffs:
            if m < 1:
                raise CurveSpecError(f"trig harmonic index must be >= 1, got {m}")
        self.coeffs = tuple(sorted(coeffs))
        self._harmonics = np.array([m for m, _, _ in self.coeffs], dtype=np.int64)
        self._cos = np.array([c for _, c, _ in self.coeffs])
        self._sin = np.array([s for _, _, s in self.coeffs])
        self._check_positive_radius()

    def spec_string(self):
        parts = []
        for m, c, s in self.coeffs:
            if c != 0.0:
                parts.append(f"c{m}={c:g}")
            if s != 0.0:
                parts.append(f"s{m}={s:g}")
        return "trig:" + ",".join(parts)

    def __repr__(self):
        return f"<Curve {self.spec_string()}>"


class SmoothTest(_RadialCurve):
    """Finite-smoothness model: r = 1 + delta * sum_{m=2}^{cutoff} m^-beta cos(mt).

    The radius Fourier coefficients decay like m^-beta, emulating a boundary of
    Holder class k + alpha ~ beta - 1.  The cutoff makes the curve technically
    analytic; finite-smoothness behavior holds only for harmonics below it.
    """

    def __init__(self, beta, delta, cutoff):
        beta, delta, cutoff = float(beta), float(delta), int(cutoff)
        if cutoff < 2:
            raise CurveSpecError(f"smoothtest cutoff must be >= 2, got {cutoff}")
        if beta <= 1:
            raise CurveSpecError(f"smoothtest beta must be > 1, got {beta}")
        self.beta, self.delta, self.cutoff = beta, delta, cutoff
        m = np.arange(2, cutoff + 1, dtype=np.int64)
        self._harmonics = m
        self._cos = delta * m.astype(np.float64) ** (-beta)
        self._sin = np.zeros_like(self._cos)
        self._check_positive_radius()

    @property
    def smoothness_exponent(self):
        return self.beta - 1.0

    def spec_string(self):
        return f"smoothtest:beta={self.beta:g},delta={self.delta:g},cutoff={self.cutoff}"

    def __repr__(self):
        return f"<Curve {self.spec_string()}>"


# spec-level operations --------------------------------------------------------


def curve_eval(curve: Curve, t):
    """Closed-form (q(t), q'(t), q''(t)) as real 2-vectors."""
    q, q1, q2 = curve.eval_complex(t)
    return _c2v(q), _c2v(q1), _c2v(q2)


def outward_normal(curve: Curve, t):
    """Unit tangent rotated by -90 degrees; rejects degenerate tangents."""
    return curve.normal(t)


def grauert_radius(curve: Curve):
    """Closed-form strip radius for ellipses (inf for circles), else None."""
    return curve.grauert_radius()


def check_curve_on_grid(curve: Curve, t):
    """Regularity and orientation checks on a sample grid.

    Raises if |q'| degenerates or if the winding number of q' is not +1
    (counterclockwise simple traversal).
    """
    _, q1, _ = curve.eval_complex(t)
    s = np.abs(q1)
    if np.min(s) < TANGENT_FLOOR:
        raise ValueError(
            f"degenerate curve: min |q'| = {np.min(s):.3g} on the grid for {curve.spec_string()}"
        )
    ratios = np.roll(q1, -1) / q1
    total = np.sum(np.angle(ratios))
    if abs(total - 2.0 * np.pi) > 1e-8:
        raise ValueError(
            f"curve is not a counterclockwise simple loop: winding {total / (2 * np.pi):.6f}"
        )


# curve spec string grammar ----------------------------------------------------

_KV = re.compile(r"^([A-Za-z][A-Za-z0-9]*)=(.+)$")


def _parse_kv_tokens(body, spec):
    out = {}
    for token in body.split(","):
        if not token:
            raise CurveSpecError(f"empty token in curve spec '{spec}'")
        m = _KV.match(token)
        if m is None:
            raise CurveSpecError(f"malformed token '{token}' in curve spec '{spec}'")
        out[m.group(1)] = (m.group(2), token)
    return out


def _take_float(kv, key, spec):
    if key not in kv:
        raise CurveSpecError(f"missing token '{key}=' in curve spec '{spec}'")
    raw, token = kv.pop(key)
    try:
        return float(raw)
    except ValueError:
        raise CurveSpecError(f"malformed token '{token}': not a number") from None


def parse_curve_spec(spec: str, default_cutoff: int | None = None) -> Curve:
    """Parse "ellipse:a=..,b=..", "trig:c2=..[,s3=..]", "smoothtest:beta=..,delta=..,cutoff=..".

    Parsing is case-sensitive; diagnostics name the offending token.  For
    smoothtest a missing cutoff falls back to default_cutoff when provided.
    """
    if ":" not in spec:
        raise CurveSpecError(f"curve spec '{spec}' lacks a family prefix like 'ellipse:'")
    family, body = spec.split(":", 1)
    if family == "ellipse":
        kv = _parse_kv_tokens(body, spec)
        a = _take_float(kv, "a", spec)
        b = _take_float(kv, "b", spec)
        if kv:
            raise CurveSpecError(f"unknown token '{next(iter(kv.values()))[1]}' for ellipse")
        if not (a >= b > 0):
            raise CurveSpecError("ellipse requires a >= b > 0")
        return Ellipse(a, b)
    if family == "trig":
        kv = _parse_kv_tokens(body, spec)
        terms = {}
        for key, (raw, token) in kv.items():
            m = re.match(r"^([cs])([0-9]+)$", key)
            if m is None:
                raise CurveSpecError(f"unknown token '{token}' for trig (expect c<m>= or s<m>=)")
            try:
                val = float(raw)
            except ValueError:
                raise CurveSpecError(f"malformed token '{token}': not a number") from None
            idx = int(m.group(2))
            c, s = terms.get(idx, (0.0, 0.0))
            if m.group(1) == "c":
                c = val
            else:
                s = val
            terms[idx] = (c, s)
        return TrigRadius([(m, c, s) for m, (c, s) in sorted(terms.items())])
    if family == "smoothtest":
        kv = _parse_kv_tokens(body, spec)
        beta = _take_float(kv, "beta", spec)
        delta = _take_float(kv, "delta", spec)
        if "cutoff" in kv:
            raw, token = kv.pop("cutoff")
            try:
                cutoff = int(raw)
            except ValueError:
                raise CurveSpecError(f"malformed token '{token}': not an integer") from None
        elif default_cutoff is not None:
            cutoff = int(default_cutoff)
        else:
            raise CurveSpecError(f"missing token 'cutoff=' in curve spec '{spec}'")
        if kv:
            raise CurveSpecError(f"unknown token '{next(iter(kv.values()))[1]}' for smoothtest")
        return SmoothTest(beta, delta, cutoff)
    raise CurveSpecError(f"unknown curve family '{family}'")

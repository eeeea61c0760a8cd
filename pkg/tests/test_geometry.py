import math

import numpy as np
import pytest

from npspec.geometry import (Curve, CurveSpecError, Ellipse, InvalidMaterialError, LameParams,
                             SmoothTest, TrigRadius, check_curve_on_grid, curve_eval,
                             grauert_radius, k0, outward_normal, parse_curve_spec)

ALL_FAMILIES = [
    Ellipse(1.0, 1.0),
    Ellipse(2.0, 1.0),
    Ellipse(1.5, 1.0),
    TrigRadius([(2, 0.1, 0.0), (3, 0.0, 0.05)]),
    SmoothTest(beta=4.5, delta=0.05, cutoff=64),
]


def test_k0_values():
    assert k0(LameParams(0.0, 1.0)) == pytest.approx(0.25, abs=0)
    assert k0(LameParams(2.0, 1.0)) == pytest.approx(0.125, abs=0)


def test_k0_invalid_material():
    with pytest.raises(InvalidMaterialError):
        LameParams(-2.0, 1.0)
    with pytest.raises(InvalidMaterialError):
        LameParams(0.0, -1.0)
    with pytest.raises(InvalidMaterialError):
        LameParams(0.0, 0.0)


def test_alphas():
    p = LameParams(0.0, 1.0)
    assert p.alpha1 == pytest.approx(0.75)
    assert p.alpha2 == pytest.approx(0.25)


def test_curve_eval_unit_circle():
    pt, d1, d2 = curve_eval(Ellipse(1.0, 1.0), 0.0)
    assert np.allclose(pt, [1.0, 0.0])
    assert np.allclose(d1, [0.0, 1.0])
    assert np.allclose(d2, [-1.0, 0.0])


def test_curve_eval_ellipse_quarter():
    pt, d1, d2 = curve_eval(Ellipse(2.0, 1.0), np.pi / 2)
    assert np.allclose(pt, [0.0, 1.0], atol=1e-15)
    assert np.allclose(d1, [-2.0, 0.0], atol=1e-15)
    assert np.allclose(d2, [0.0, -1.0], atol=1e-15)


def test_curve_eval_trig_radius():
    pt, _, _ = curve_eval(TrigRadius([(2, 0.1, 0.0)]), 0.0)
    assert np.allclose(pt, [1.1, 0.0])


def test_outward_normal_examples():
    assert np.allclose(outward_normal(Ellipse(1, 1), 0.0), [1.0, 0.0])
    assert np.allclose(outward_normal(Ellipse(1, 1), np.pi), [-1.0, 0.0], atol=1e-15)
    assert np.allclose(outward_normal(Ellipse(2, 1), 0.0), [1.0, 0.0])


def test_normal_unit_and_orthogonal():
    t = np.linspace(0, 2 * np.pi, 57)
    for curve in ALL_FAMILIES:
        n = curve.normal(t)
        d1 = curve.d1(t)
        assert np.max(np.abs(np.linalg.norm(n, axis=-1) - 1.0)) < 1e-14
        dot = np.abs(np.sum(n * d1, axis=-1))
        assert np.all(dot < 1e-12 * np.linalg.norm(d1, axis=-1))


def test_grauert_radius():
    assert grauert_radius(Ellipse(2, 1)) == pytest.approx(math.log(3.0), rel=1e-14)
    assert grauert_radius(Ellipse(1.5, 1)) == pytest.approx(math.log(5.0), rel=1e-14)
    assert grauert_radius(Ellipse(1, 1)) == math.inf
    assert grauert_radius(TrigRadius([(2, 0.1, 0.0)])) is None


def test_derivatives_match_finite_differences(rng):
    h = 1e-4
    for curve in ALL_FAMILIES:
        t = rng.uniform(0, 2 * np.pi, size=100)
        pt_p = curve.point(t + h)
        pt_m = curve.point(t - h)
        d1_fd = (pt_p - pt_m) / (2 * h)
        d2_fd = (pt_p - 2 * curve.point(t) + pt_m) / h**2
        scale1 = np.linalg.norm(curve.d1(t), axis=-1)
        scale2 = np.maximum(np.linalg.norm(curve.d2(t), axis=-1), 1e-3)
        assert np.max(np.linalg.norm(curve.d1(t) - d1_fd, axis=-1) / scale1) < 1e-6
        assert np.max(np.linalg.norm(curve.d2(t) - d2_fd, axis=-1) / scale2) < 1e-5


def test_winding_check():
    t = 2 * np.pi * np.arange(128) / 128
    for curve in ALL_FAMILIES:
        check_curve_on_grid(curve, t)


def test_riemann_flag():
    assert Ellipse(1, 1).riemann_parametrization
    assert Ellipse(2, 2).riemann_parametrization
    assert not Ellipse(2, 1).riemann_parametrization
    assert not TrigRadius([(2, 0.1, 0.0)]).riemann_parametrization


def test_smoothness_exponent():
    assert SmoothTest(4.5, 0.05, 64).smoothness_exponent == pytest.approx(3.5)
    assert Ellipse(2, 1).smoothness_exponent is None


def test_invalid_curves():
    with pytest.raises(CurveSpecError):
        Ellipse(1.0, 2.0)
    with pytest.raises(CurveSpecError):
        TrigRadius([(1, 1.5, 0.0)])  # radius dips negative
    with pytest.raises(CurveSpecError):
        SmoothTest(beta=0.5, delta=0.1, cutoff=16)


def test_parse_curve_spec_roundtrip():
    for spec in ["ellipse:a=2,b=1", "trig:c2=0.1,s3=0.05", "smoothtest:beta=4.5,delta=0.05,cutoff=64"]:
        assert parse_curve_spec(spec).spec_string() == spec


def test_parse_curve_spec_diagnostics():
    with pytest.raises(CurveSpecError, match="unknown curve family"):
        parse_curve_spec("square:a=1")
    with pytest.raises(CurveSpecError, match="malformed token 'a=x'"):
        parse_curve_spec("ellipse:a=x,b=1")
    with pytest.raises(CurveSpecError, match="a >= b"):
        parse_curve_spec("ellipse:a=1,b=2")
    with pytest.raises(CurveSpecError, match="missing token 'cutoff='"):
        parse_curve_spec("smoothtest:beta=4.5,delta=0.05")
    # case-sensitive
    with pytest.raises(CurveSpecError):
        parse_curve_spec("Ellipse:a=2,b=1")
    # cutoff default comes from the caller
    c = parse_curve_spec("smoothtest:beta=4.5,delta=0.05", default_cutoff=128)
    assert c.cutoff == 128


def test_degenerate_tangent_rejected():
    class Pinch(Curve):
        def eval_complex(self, t, dtype=np.float64):
            t = np.asarray(t, dtype=dtype)
            z = np.zeros_like(t)
            return t + 0j, z + 0j, z + 0j

        def spec_string(self):
            return "pinch"

    with pytest.raises(ValueError, match="degenerate tangent"):
        Pinch().normal(0.0)

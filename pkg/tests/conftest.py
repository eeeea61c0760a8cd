"""Shared fixtures; expensive assemblies and eigendecompositions are session-cached."""

import numpy as np
import pytest

from npspec.assembly import QuadratureGrid, assemble_K, assemble_K_adjoint, assemble_S
from npspec.geometry import Ellipse, LameParams, SmoothTest
from npspec.spectral import cluster_pm_k0, resolvable_eigenvalues


@pytest.fixture(scope="session")
def params01():
    return LameParams(lam=0.0, mu=1.0)


@pytest.fixture(scope="session")
def disk():
    return Ellipse(1.0, 1.0)


@pytest.fixture(scope="session")
def ellipse21():
    return Ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def operator_cache(params01):
    """Cache of assembled operators keyed by (curve_spec, tag, n)."""
    cache = {}

    def get(curve, tag, n):
        key = (curve.spec_string(), tag, n)
        if key not in cache:
            grid = QuadratureGrid(n)
            fn = {
                "K": assemble_K,
                "K_adjoint": assemble_K_adjoint,
                "S": assemble_S,
            }[tag]
            cache[key] = fn(curve, params01, grid)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def eig_cache(operator_cache):
    """Resolvable (Nyquist-deflated, realified) eigenvalues per curve and n."""
    cache = {}

    def get(curve, n):
        key = (curve.spec_string(), n)
        if key not in cache:
            cache[key] = resolvable_eigenvalues(operator_cache(curve, "K", n))[0]
        return cache[key]

    return get


@pytest.fixture(scope="session")
def ellipse21_report(ellipse21, params01, operator_cache, eig_cache):
    """Clustered spectrum of Ellipse(2,1) at n=512 with the n=1024 check grid."""
    coarse = eig_cache(ellipse21, 512)
    fine = eig_cache(ellipse21, 1024)
    return cluster_pm_k0(coarse, params01.k0, resolved_reference=fine,
                         n=512, curve_spec=ellipse21.spec_string(),
                         lam=params01.lam, mu=params01.mu)


@pytest.fixture(scope="session")
def smoothtest_curve():
    return SmoothTest(beta=4.5, delta=0.05, cutoff=2048)


@pytest.fixture
def rng():
    # function scope: every test sees the same deterministic stream
    return np.random.default_rng(20240817)

"""Spectral diagnostics for the elastic boundary double-layer operator."""

__version__ = "0.1.0"

from .geometry import (Curve, CurveSpecError, Ellipse, InvalidMaterialError, LameParams,
                       SmoothTest, TrigRadius, curve_eval, grauert_radius, k0,
                       outward_normal, parse_curve_spec)
from .assembly import (OperatorMatrix, PTransform, QuadratureGrid, assemble_H0, assemble_K,
                       assemble_K_adjoint, assemble_Kcal, assemble_P, assemble_S,
                       load_operator, save_operator)
from .spectral import (ProjectorPair, SpectrumReport, cluster_pm_k0, compact_defect,
                       conjugate_by_P, decay_levels, eigen_decompose, kernel_fourier_decay,
                       resolvable_eigenvalues, riesz_projectors, truncate_fourier)
from .ratefit import RateFit, compare_with_theory, fit_exponential, fit_polynomial
from .bvp import TractionData, solve_neumann

"""ricciforge: numerical verifiers for the intrinsic conditions under which a
metric comes from a CMC (free-boundary) immersion into a space form,
reconstruction of the extrinsic data from intrinsic data, and the cousin
correspondence between space forms."""

__version__ = "0.1.0"

from .chart import (ComplexField, GridChart, ScalarField, SymTensorField2,
                    cauchy_riemann_residual, dz, gradient_flat, grad_norm_sq_g,
                    laplacian_flat, laplacian_g, normal_derivative, path_integrate)
from .curvature import (ConformalMetric2D, CurvatureTensors, GridChartN,
                        MetricFieldN, christoffel, gaussian_curvature,
                        geodesic_curvature_boundary, riemann)
from .ricci2d import (SpaceFormParams, Wall, boundary_flux_residual,
                      capillary_identity_residual, moroianu_flatness_equivalence,
                      moroianu_residual, ricci_flatness_residual,
                      ricci_with_boundary_check, sff_norm_sq, zero_set_classify)
from .reconstruct import (ReconstructionResult, boundary_A_check, build_A,
                          codazzi_residual_2d, gauss_residual_2d,
                          holomorphic_sqrt, log_harmonic_check, roundtrip,
                          simons_residual)
from .lawson import cousin_involution_check, cousin_params, residual_invariance_check
from .hyperdim import (FourTensorField, SymTensorFieldN, a_compose_a,
                       abar_metric, boundary_umbilic_check, condition_i_residual,
                       condition_ii_residual, gauss_codazzi_residual_ndim,
                       kulkarni_nomizu, minimality_check)
from .report import CheckBundle, ResidualReport, fit_order

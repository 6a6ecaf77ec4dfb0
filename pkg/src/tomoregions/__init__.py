"""Error regions for quantum state tomography under the positivity constraint."""

__version__ = "0.1.0"

from .errors import NumericalFailure, TomoError
from .statespace import (BlochVector, DensityOperator, GellMannBasis, PureStateVector, build_basis,
                         from_bloch, mineig, psd_distance_lower_bound, pure_bloch_coords, to_bloch)
from .ellipsoid import (ContainmentVerdict, StateEllipsoid, check_containment, point_at,
                        positivity_functional, sphere_contained_in_psd,
                        truncate_and_sample_volume)
from .tomography import (MeasurementDesign, OutcomeEllipsoid, confidence_ellipsoid,
                         linear_inversion, simulate_counts)
from .hardness import (BalancedSumEncoding, BalancedSumInstance, decide_via_geometry, encode,
                       objective, solve_balanced_sum, violation_witness)
from .specialfn import GammaEval, RadiusSolution, gamma_difference_bound, mvcr_radius, reg_inc_gamma
from .bayes import (CredibleRadiusPair, GaussianPosterior, TruncatedGaussianPosterior,
                    criterion_decides_containment, encode_ellipsoid_as_posterior,
                    estimate_normalization, ball_series_normalization, mahalanobis,
                    truncated_mvcr_radius)

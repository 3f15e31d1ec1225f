"""Exponential sampling series and their Kantorovich variants on the log scale."""

from .errors import (AtNumericFloorError, BoundViolatedError, ConditionViolationError,
                     ConfigError, ExpSamplingError, InsufficientDataError, InvalidGridError,
                     MissingDerivativeError, NumericDomainError, ToleranceNotMetError,
                     UnsupportedOrderError)
from .mellin_core import (GridSpec, LogHolder, MellinTransformQuery, MellinTransformResult,
                          TestFunction, log_modulus_of_continuity, mellin_antiderivative,
                          mellin_derivative, mellin_taylor_eval, mellin_transform, to_log)
from .functions import REGISTRY, get_function
from .kernels import (AveragedKernel, BSplineKernel, CustomKernel, JacksonKernel, Kernel,
                      MomentReport, absolute_moment, averaged_kernel, certify_kernel,
                      eval_kernel, moment, parse_kernel, theta_averaged_kernel,
                      theta_kernel)
from .operators import (SamplingConfig, generalized_series, kantorovich_series,
                        lemma31_residual, saturation_functional, saturation_limit,
                        theta_averaged_series_of_antiderivative, theta_generalized,
                        theta_kantorovich)
from .analysis import (ErrorRow, ErrorTable, direct_bound, direct_bound_check, error_table,
                       inverse_probe, rate_fit, saturation_probe, sup_error,
                       voronovskaya_probe)

__version__ = "0.1.0"

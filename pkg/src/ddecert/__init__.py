"""Equivalent-norm dissipativity certificates for linear delay equations.

Build a :class:`LinearDelaySystem`, certify a decay rate with
:func:`build_certificate`, and cross-check it against the generator
spectrum, a discretized dissipativity test and simulated trajectories.
"""

from .certificate import (ContractionCertificate, RateBounds, NoCertificateError,
                          RenormMatrix, ShiftedCertificate, WeightFunction, build_certificate,
                          rate_bounds, density_gap, dissipativity_gap,
                          generalized_contraction_shift, lyapunov_renorm, min_mu,
                          weight_function)
from .kernel import (DelayAtom, DelayDensity, DelayKernel, LinearDelaySystem,
                     dissipativity_lambda, exp_moment, sq_exp_moment, total_variation)
from .operator_check import (DissipativityReport, check_dissipativity, discretize_generator,
                             refinement_study)
from .spectrum import (SpectrumApproximation, dominant_real_root, generator_eigenvalues,
                       verify_characteristic)

__version__ = "0.1.0"

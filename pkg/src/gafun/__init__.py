"""Holomorphic representatives of nonlinear generalized functions on sector domains.

The package evaluates, embeds and diagnoses functions f(z, zeta) that are
holomorphic on the sector domains V_n, and builds the weighted-space machinery
(norm estimates, chains, the psi-construction) on sampled grids.
"""
from .errors import (BranchCutError, ConfigError, DomainError, EvaluationError,
                     FamilyMismatchError, FitError, GafunError, ParseError, PoleError,
                     PreconditionError, QuadratureError, SamplingError, WeightFormError)
from .domains import (Ambient, CompactSet, SampleGrid, SectorDomain, ShrinkingFamily,
                      make_family, sample)
from .parser import parse
from .algebra import (NormCertificate, Representative, SpaceIndex, WeightFunction, add,
                      differentiate, evaluate, mul, negligibility_check, moderateness_check,
                      norm_estimate, scale, sub)
from .kernels import MollifierSpec, PiecewiseLinearDensity, CallableDensity
from .embedding import (ClassicalObject, embed, embed_analytic, embed_compact,
                        embed_constant_at_infinity, embed_delta, embed_polynomial_at_infinity)
from .diagnostics import (GeneralizedNumber, SupportWarning, TestFunction, associate, gn_norm,
                          laurent, null_test, pair, pointvalue)
from .topology import (SharpNeighborhood, bounded_in, build_chain, construct_psi, hull,
                       hull_member, hull_product, sharp_membership, verify_compact_extraction)

__version__ = "0.1.0"

"""Exact symbolic computation with semifree dg categories over the integers.

The package provides word/element arithmetic in free graded categories,
semifree presentations with Leibniz differentials, dg functors, cylinder
objects, dg localisation, strict and homotopy pushouts, a deterministic
presentation simplifier, and the lens-space invariant pipeline built on top
of them.
"""

from .core import (CompositionError, Element, GeneratorRef, ParseError,
                   Signature, SignatureError, Word, elem_add, elem_degree,
                   elem_mul, format_element, parse_element, word_compose)
from .presentation import (DgPresentation, InverseRecord, PresentationBuilder,
                           PresentationError, ValidationReport,
                           extend_differential, load_presentation,
                           presentation_from_json, save_presentation, validate)
from .functors import (DgFunctor, FunctorError, Span, apply, check_dg,
                       compose_functors, functor_from_json, identity_functor,
                       load_functor, save_functor)
from .constructions import (ConstructionError, cylinder, cylinder0,
                            homotopy_pushout, homotopy_pushout_localized,
                            localize, pushout)
from .simplify import (ScriptedChange, ScriptedLocalize, ScriptedRename,
                       SimplifyError, cancel_pair, change_of_variables,
                       identify_objects, rename_generators, replay, simplify)
from .lens import (BasisSlice, CyclicElement, LensAlgebra, LensError,
                   LensParams, PiMap, build_cpq, build_f, build_free_dga,
                   check_commuting, chi_element, coprime_pairs,
                   delta_involution, divisibility_check, enumerate_basis,
                   f_polynomial, f_vector, g_vector, geometric_sum,
                   heegaard_pipeline, homotopy_equivalent, lambda_element,
                   mu_map, mu_tilde, phi_vector, pi_map, psi_matrix, rho,
                   torus_pipeline)

__version__ = "0.1.0"

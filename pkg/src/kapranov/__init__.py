"""Exact-arithmetic strongly homotopy Leibniz algebras from dg derivations.

The package builds, over the rationals:

- finite-dimensional commutative dg algebras and free dg modules,
- module-valued dg derivations, delta-connections, Atiyah cocycles,
- the tower of higher brackets generated by a connection, together with
  mechanical checkers for every identity those towers are supposed to
  satisfy (homotopy Leibniz identities, morphism equations, module
  identities, homotopy invariance).
"""

from .graded import (Element, GradedBasis, MultilinearMap, Scalar,
                     eval_multilinear, koszul_sign, ordered_partitions,
                     partition_sign, shuffles)
from .algebra import (AlgebraElement, CdgaPresentation, LieAlgebraData,
                      ce_algebra, validate_cdga)
from .modules import (DgModule, ModuleElement, ModuleMorphism,
                      apply_module_differential, contract, dual_module,
                      end_module, hom_module, pair, simple_tensor,
                      tensor_module, validate_dg_module)
from .cohomology import CochainComplex
from .derivations import (DerivationHomotopy, DerivationMorphism, DgDerivation,
                          extend_derivation, find_homotopy, homotopy_offset,
                          kaehler_differentials, universal_factorization,
                          validate_dg_derivation)
from .connections import (AtiyahClass, AtiyahCocycle, DeltaConnection,
                          atiyah_class, atiyah_cocycle, check_naturality,
                          covariant_derivative, extend_connection,
                          flat_connection_exists)
from .kapranov import (BracketFamily, CohomologyAction, CohomologyBracket,
                       HatConnection, KBasis, ModuleActionFamily,
                       MorphismFamily, a_multilinearity_violations,
                       bracket_nonskew_witness, bracket_on_elements,
                       check_leibniz_infinity, check_linfty_morphism,
                       check_module_identities, cohomology_action,
                       cohomology_leibniz_bracket, compose_morphism_families,
                       covariant_tensor_derivative, homotopy_iso,
                       kapranov_brackets, kapranov_module, kapranov_morphism,
                       trivialization)
from .builders import (LiePair, LinearMapObject, LinearMapSetup, PairSetup,
                       abelian_pair, adjoint_linear_map,
                       adjoint_trivial_linear_map, affine_pair,
                       coadjoint_module, double_adjoint_linear_map,
                       lie_pair_setup, linear_map_setup,
                       loday_pirashvili_bracket, sl2_borel_pair,
                       splitting_homotopy)

__version__ = "0.1.0"

"""Finite-dimensional operator-valued free probability.

Block algebras, conditional expectations, amalgamated free products computed
by two independent moment engines, tail algebras of exchangeable sequences
and the split of central tails into mixtures of free product states.
"""

from .errors import (AmalgamError, EmbeddingNotHomomorphism, ExpectationError, FaithfulnessError,
                     IllConditioned, IllDefined, NoCompatibleCE, NotCentral, NotCommutative,
                     NotIdenticallyDistributed, ResidualTooLarge, StateNotEPreserving, UnsupportedWord,
                     ValidationError)
from .finalg import AlgElement, BlockAlgebra, FaithfulState, GnsSpace, State, gns
from .subalg import (ConditionalExpectation, StarSubalgebra, center, conditional_expectation,
                     generate_star_subalgebra, relative_commutant)
from .ncpart import BACKEND, NCPartition, enumerate_nc, kreweras, moebius, moebius_nc
from .ovfree import (AmalgamatedModel, Arm, Letter, cumulant_from_moments, moment_centering,
                     moment_cumulant, multiplicity_embedding, ov_cumulant, scalar_moment)
from .definetti import (LemmaArmSpec, build_arm_lemma_aA, build_definetti_model, check_exchangeable,
                        ergodic_average_norm, tail_algebra, vandermonde_recover)
from .fps import (CentralTail, FreeProductStateMixture, NonCentralTail, centrality_verdict, characters,
                  check_quotient_freeness, check_scalar_freeness, gns_projection_check, induced_expectation)
from .tolerance import get_tol, set_tol, tolerance

__version__ = "0.1.0"

"""Universal state inversion, distributed concurrence and correlation equalities
for multipartite quantum states of any finite local dimension."""
from .correlation import (EntropyLedger, MonogamyReport, concurrence_bipartite,
                          conservation_combination, distributed_concurrence, entropy_ledger,
                          evolve_subsystem, monogamy_report, projector_identity_residual,
                          three_party_inequality, verify_mixed_equality)
from .gellmann import (GellMannBasis, build_basis, maximally_entangled, swap_operator,
                       trace_identity, transpose_identity)
from .inversion import (BlochDecomposition, bloch_decompose, invert, invert_bloch,
                        invert_generators, invert_product, invert_single, invert_subsets,
                        tr_rho_rhotilde)
from .monotone import (FTensor, MonotoneVerdict, TwoOutcomeChannel, builtin_counterexample,
                       f_tensor, mon3_check, monotone_deficit_cd, monotone_deficit_cd2,
                       schmidt_first_party, search_violation)
from .qstate import (DensityOperator, HilbertDims, PureState, linear_entropy, partial_trace,
                     random_mixed, random_pure, subsets)

__version__ = "0.1.0"

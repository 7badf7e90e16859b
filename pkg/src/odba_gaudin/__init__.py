"""Open inhomogeneous XXX chain with general boundaries and its Gaudin limit."""
from .gaudin_ops import (GaudinBoundary, boundary_at_eta, hamiltonian, hamiltonian_fd, hamiltonians,
                         leading_scalar)
from .matcore import AuxBlockMatrix, Poly, eig_general, embed, poly_interp
from .monodromy import complete_by_monodromy, track
from .roots import SolveOptions, canonicalize, enumerate_roots, newton
from .spectra import (chain_bethe_values, common_eigenbasis, gaudin_bethe_spectrum, gaudin_exact_spectrum,
                      lambda_polys_from_transfer, match_spectra, solve_chain_bethe, solve_gaudin_bethe,
                      transfer_eigenvalues)
from .tq_ansatz import (BetheRoots, TQContext, chain_bae_residual, gaudin_bae_residual, gaudin_energy,
                        lambda_eval, lambda_relations_residuals, q_eval)
from .vertex_model import (ChainSpec, OpenBoundary, check_r_identity, check_reflection, k_minus, k_plus,
                           monodromies, r_matrix, random_theta, transfer_matrix)

__version__ = "0.1.0"

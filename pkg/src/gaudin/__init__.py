"""Numerical toolkit for rational spin-1/2 Gaudin magnets.

Eigenstates come from quadratic equations in the on-level variables
Λ(ε_i); overlaps, norms, and local spin form factors are small dense
determinants; everything is cross-checkable against a brute-force
product-basis oracle at small N.
"""

from .model import (Axis, BasisOccupation, ChargeEigenvalues, GaudinModel,
                    charge_eigenvalues, hamiltonian_energy, load_model,
                    new_model, save_model)
from .solver import (ContinuationConfig, LambdaState, SectorSolutions,
                     quadratic_jacobian, quadratic_residual, seed_state,
                     solve_all_sectors, solve_sector, transform_axis)
from .rapidities import (RapiditySet, bethe_residuals, extract_rapidities,
                         lambda_from_rapidities, tau_eigenvalue)
from .determinants import (det, izergin_overlap, norm_product,
                           normalized_expectation, partition_overlap_det,
                           partition_overlap_det_rapidity,
                           partition_overlap_perm, scalar_product_det,
                           splus_form_factor, sz_form_factor)
from .dynamics import (CentralSpinParams, FullSampling, MonteCarloSampling,
                       SpectralTable, TimeSeries, build_spectral_table,
                       coherence_factor, map_to_gaudin, run_dynamics,
                       sector_completeness)

__version__ = "0.1.0"

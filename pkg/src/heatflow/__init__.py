"""Numerics for the heat-flow deformation H_t of the Riemann xi function:
evaluation, zeros, zero dynamics, renormalized energies and gap statistics."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .constants import Constants
from .errors import HeatflowError
from .special import (
    DEFAULT_POLICY, ClassicalGrid, PrecisionPolicy, classical_gap, classical_location, log_plus, phi, psi,
    psi_prime, xi_riemann,
)
from .ht import HtQuery, evaluate, ht_heat_kernel, ht_log_derivative, ht_quadrature, ht_saddle, it_stationary, solve_saddle
from .zeros import ZeroConfiguration, ZeroTable, count_zeros, find_zeros, load_zero_table, rvm_profile
from .dynamics import FlowControls, TailModel, flow, gap_derivative, identity_suite, velocity_field
from .energy import (
    dorium_check, interaction_matrix, long_range_profile, potential_V, psi_weight, renorm_L, weighted_sums,
    windowed_energy,
)
from .stats import equilibrium_deviation, gap_report, lehmer_scan

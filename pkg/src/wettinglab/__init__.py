"""wettinglab: simulation and verification laboratory for critical planar
interface wetting -- FK / six-vertex / Ashkin-Teller couplings, interface
statistics, and synchronized-walk kernels."""

__version__ = "0.1.0"

from .params import CriticalParams, params_from_q
from .lattice import DobrushinDomain, build_domain, dual_edge, euler_offset
from .gibbs import MeasureSpec, OracleGraph, enumerate_measure, log_weight, sample_mcmc
from .coupling import CouplingThresholds, verify_chain

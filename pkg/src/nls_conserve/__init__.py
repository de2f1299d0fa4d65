"""Pseudospectral simulation and conservation-law checks for i u_t + 1/2 Lap u = lam |u|^(p-1) u."""

from .exponents import (INF, AdmissiblePair, CriticalityReport, ExponentError, alpha,
                        cazenave_weissler_pair, classify_criticality, dual_exponent,
                        is_admissible, proof_pair)
from .integrator import (BlowUpError, NlsParams, StepSchedule, Trajectory, evolve,
                         nonlinear_phase_step, strang_step)
from .lens import (EquivalenceResult, LensImage, equivalence_experiment, lens_forward,
                   lens_inverse, verify_tran01)
from .observables import (BalanceReport, ObservableRecord, decay_fit, e1_balance, energy,
                          grad_norm_sq, lp1_norm_p1, mass, momentum, observe, pc_balance,
                          source_integral, variance, weighted_J_norm_sq)
from .spectral import (Field, Grid, SpectralField, analyze, dealias, free_propagate, gradient,
                       laplacian, synthesize)

__version__ = "0.1.0"

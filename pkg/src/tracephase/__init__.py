"""Trace-coupled Allen-Cahn energy on the half-space: minimizers and density estimates."""

__version__ = "0.1.0"

from .domain import (CellMask, HalfSpaceGrid, MirroredField, ScalarField, annulus_mask,
                     half_ball_mask, reflect_even, trace_restrict)
from .energy import EnergyBreakdown, Regularization, energy, energy_ball, energy_gradient
from .estimates import (DensityReport, RecursionParams, RecursionVerdict, area_term,
                        hypothesis_check, proof_quantities, recursion_check, scan, volume_above)
from .model import (BarrierParams, DoubleWell, barrier_beta, barrier_vk, s_weight, standard_well,
                    validate_wells, well_by_name)
from .solver import (AuditReport, NumericalFailure, SolveOptions, heteroclinic_1d, minimize,
                     planar_interface, q_minimality_audit)

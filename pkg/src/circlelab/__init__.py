"""circlelab: attracting invariant circles of dissipative twist maps.

Graph-transform fixed points, translated-curve solves, order-k normal
forms, and parameter-space region sweeps for the two-parameter family of
dissipative twist maps of the cylinder under general analytic
perturbations.
"""

from . import errors
from .diophantine import (DiophantineNumber, certify, continued_fraction,
                          convergents, golden, rotation_number)
from .graphflow import (GateReport, LipGraph, gate, graph_transform,
                        measure_contraction, solve_invariant_circle)
from .lab import SweepSpec, emit_figures, run_sweep
from .maps import (Frame, DioShiftFrame, NormalFormFrame, Params,
                   Perturbation, PolyInRho, RussRFrame, TranslatedCurveFrame,
                   eval_P, eval_Q, jacobian_Q, radius_r_alpha,
                   translation_tau, trapping_annulus)
from .normalform import (LocalizedMap, NormalFormResult, RegionReport,
                         classify_region, invariant_radius, localize, reduce,
                         verify_circle_in_region)
from .russmann import (NewtonTrace, TranslatedCurve, dlambda_dnu,
                       find_c_alpha, solve_translated_curve)
from .smalldiv import (DifferenceProblem, DifferenceSolution,
                       solve_difference, solve_log_multiplicative,
                       verify_norm_bound)
from .trig import CircleLift, TrigPoly

__version__ = "0.1.0"

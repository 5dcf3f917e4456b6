"""Multistep ODE solvers with Heavy Ball momentum, and the tools to analyse them."""
from .core import MethodForm, ShiftPolynomial, Trajectory, check_consistency, eval_shift_poly
from .methods import (
    Family,
    MethodSpec,
    Stepper,
    integrate,
    linear_multistep_form,
    make_aggregated,
    make_method,
    parse_method,
    solve_on_grid,
)
from .problems import Problem, linear_system, test_equation, toy_2x2
from .stability import closed_form_locus, find_roots, is_stable, locus, stability_raster
from .analysis import MagnitudeConfig, empirical_order, formal_order, global_error, magnitude_score

__version__ = "0.1.0"

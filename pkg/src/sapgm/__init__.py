"""Smoothing accelerated proximal gradient method for nonsmooth multiobjective problems."""

from .metrics import Front, filter_nondominated, hypervolume, performance_profile, purity, spread_delta, spread_gamma
from .problems import PROBLEM_NAMES, ProblemSpec, build_problem, generate_large_scale, sample_starts
from .smoothing import smooth_abs, smooth_l1, smooth_max, smooth_plus
from .solver import RunRecord, SolverConfig, fpga_run, mu_schedule, sapgm_run
from .subproblem import ProxFriendlyG, SubproblemInstance, frank_wolfe_solve

__version__ = "0.1.0"

"""Interference statistics of random completely positive maps.

A system of dimension ``n`` is coupled to a thermal spin environment through a
Haar-random joint unitary; the reduced dynamics is a CP map whose interference
measure is studied analytically and by Monte Carlo sampling.
"""
from .cue import SeedSpec, haar_self_test, sample_cue, sample_cue_batch
from .ensemble import EnsembleConfig, fit_lognormal, run_ensemble, table1_report
from .interference import interference_fast, interference_of_map, interference_unitary
from .moments import mean_interference, moment_report, second_moment, std_dev, variance
from .propagator import Superoperator, apply, build_propagator, choi_matrix
from .thermal import ThermalEnvironment, thermal_weights
from .weingarten import brute_mean, brute_second_moment, diagram_value, monomial_average

__version__ = "0.1.0"

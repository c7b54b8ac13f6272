"""Fractal configuration sets, strip-mass scaling and their sharpness examples."""

__version__ = "0.1.0"

from .geometry import (ConvexBody, PhiFamily, check_fibration, estimate_lipschitz, gauge,
                       make_phi_body_gauge, make_phi_curve_family, make_phi_dot, make_phi_euclid,
                       rotational_curvature_det)
from .fractal_sets import (IntervalSet, ParaboloidFamily, PointSet, PolarPointSet, build_cantor,
                           build_F, build_grid, build_lattice_E, build_M2, build_paraboloid_family,
                           build_q_sequence, build_valtr)
from .measures import (EmpiricalMeasure, PolarProductMeasure, ScalingReport, ball_mass_profile,
                       fit_loglog, fit_strip_exponent, radon_apply, strip_mass, uniform_measure)
from .dimension import (BoxCountTable, ConfigSet, box_count, build_config_set,
                        minkowski_dim_estimate, sharpness_experiment, stage_dimension,
                        verify_rvt_bound)
from .incidence import count_incidences, incidence_scaling
from .falconer import distance_set, falconer_lower_bound
from .fourier import curve_measure_fourier, decay_exponent, sphere_measure_fourier
from .estimators import BoxCountingDimension, LocalMassExponent, StripMassExponent

__all__ = [
    "ConvexBody", "PhiFamily", "check_fibration", "estimate_lipschitz", "gauge",
    "make_phi_body_gauge", "make_phi_curve_family", "make_phi_dot", "make_phi_euclid",
    "rotational_curvature_det",
    "IntervalSet", "ParaboloidFamily", "PointSet", "PolarPointSet", "build_cantor", "build_F",
    "build_grid", "build_lattice_E", "build_M2", "build_paraboloid_family", "build_q_sequence",
    "build_valtr",
    "EmpiricalMeasure", "PolarProductMeasure", "ScalingReport", "ball_mass_profile", "fit_loglog",
    "fit_strip_exponent", "radon_apply", "strip_mass", "uniform_measure",
    "BoxCountTable", "ConfigSet", "box_count", "build_config_set", "minkowski_dim_estimate",
    "sharpness_experiment", "stage_dimension", "verify_rvt_bound",
    "count_incidences", "incidence_scaling",
    "distance_set", "falconer_lower_bound",
    "curve_measure_fourier", "decay_exponent", "sphere_measure_fourier",
    "BoxCountingDimension", "LocalMassExponent", "StripMassExponent",
]

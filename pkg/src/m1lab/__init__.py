"""Simulation toolkit for joint functional limits of sums and maxima of heavy-tailed linear processes."""

from .cadlag import BivariatePath, CompletedGraph, StepFunction, completed_graph, make_step
from .heavytail import TailModel
from .limits import LimitSpec, limit_spec, sample_limit_batch
from .linproc import CoefficientSeq, joint_path
from .skorohod import MetricResult, d_M1, d_M2, d_p, d_p_M2, d_uniform

__all__ = [
    "BivariatePath",
    "CoefficientSeq",
    "CompletedGraph",
    "LimitSpec",
    "MetricResult",
    "StepFunction",
    "TailModel",
    "completed_graph",
    "d_M1",
    "d_M2",
    "d_p",
    "d_p_M2",
    "d_uniform",
    "joint_path",
    "limit_spec",
    "make_step",
    "sample_limit_batch",
]
__version__ = "0.1.0"

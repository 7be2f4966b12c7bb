"""Honest confidence sets for the mean of a high-dimensional linear model.

The two-step construction projects the response onto the span of a candidate
set of strong predictors and shrinks the remainder with a Stein estimate; see
:func:`honestsets.confset.build_two_step`.
"""
from ._backend import BACKEND
from .confset import (BallCS, CandidateSet, EllipsoidCS, build_two_step, contains, generate_candidates,
                      geometry, naive_chi2_ball, select_best)
from .dataset import Dataset
from .errors import (CalibrationError, DegenerateInputError, DomainError, HonestSetsError,
                     InvalidInputError)

__version__ = "0.1.0"

__all__ = ["BACKEND", "BallCS", "CalibrationError", "CandidateSet", "Dataset", "DegenerateInputError",
           "DomainError", "EllipsoidCS", "HonestSetsError", "InvalidInputError", "build_two_step",
           "contains", "generate_candidates", "geometry", "naive_chi2_ball", "select_best"]

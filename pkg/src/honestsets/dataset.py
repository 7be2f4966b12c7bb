from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError


@dataclass(frozen=True)
class Dataset:
    """Design, response and known noise variance of ``y = X beta + eps``."""

    X: np.ndarray
    y: np.ndarray
    sigma2: float

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise InvalidInputError("X must be n x p and y length n")
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def sigma(self) -> float:
        return self.sigma2 ** 0.5

    @staticmethod
    def stack(a: "Dataset", b: "Dataset") -> "Dataset":
        return Dataset(np.vstack([a.X, b.X]), np.concatenate([a.y, b.y]), a.sigma2)

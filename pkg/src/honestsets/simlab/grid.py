"""The full simulation grid: sparse settings and the dense-signal study."""
from __future__ import annotations

from .design import BETA_MODES, DESIGNS
from .runner import SimConfig

# ten signal strengths: five evenly spaced in (0, 1] and five in (1, 5]
B_GRID = tuple(round(0.2 * i, 1) for i in range(1, 6)) + tuple(round(1.0 + 0.8 * i, 1) for i in range(1, 6))
RULES = ("val", "cv", "1se")
SPARSE_METHODS = ("stein_vol", "stein_diam", "adaptive", "oracle_lasso", "tsl_vol", "tsl_diam", "naive")
DENSE_METHODS = ("stein_vol", "adaptive", "oracle_lasso", "naive")


def sparse_grid(replicates=100, master_seed=42, methods=SPARSE_METHODS, b_grid=B_GRID, **overrides):
    """Designs x beta modes x b values, each under the three lambda rules."""
    out = []
    sid = 1
    for rule in RULES:
        for design in DESIGNS:
            for mode in BETA_MODES:
                for b in b_grid:
                    out.append(SimConfig(design=design, beta_mode=mode, b=b, lambda_rule=rule,
                                         methods=tuple(methods), replicates=replicates,
                                         master_seed=master_seed, setting_id=sid, **overrides))
                    sid += 1
    return out


def dense_grid(replicates=100, master_seed=42, methods=DENSE_METHODS, b_grid=B_GRID, first_id=1001,
               **overrides):
    """Equicorrelated design with s = 100 (uniform) and s = 200 (mixed), lambda by the one-SE rule."""
    out = []
    sid = first_id
    for mode, s in (("uniform", 100), ("mixed", 200)):
        for b in b_grid:
            out.append(SimConfig(design="equicorr", beta_mode=mode, s=s, b=b, lambda_rule="1se",
                                 methods=tuple(methods), replicates=replicates,
                                 master_seed=master_seed, setting_id=sid, **overrides))
            sid += 1
    return out


def full_grid(replicates=100, master_seed=42, include_dense=True, **overrides):
    grid = sparse_grid(replicates, master_seed, **overrides)
    if include_dense:
        grid += dense_grid(replicates, master_seed, **overrides)
    return grid

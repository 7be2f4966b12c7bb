"""Regeneration of the golden constant files shipped in ``honestsets/data``.

``cs_constants.csv`` holds the SURE deviation constants; ``calibration_constants.csv``
holds reference lasso constants and the frozen ``eta`` factors that scale the
oracle constant when lambda is chosen by cross-validation.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .. import competitors, solvers, stein
from ..dataset import Dataset
from . import calibration
from .design import DESIGNS, sample_dataset
from .runner import SimConfig

log = logging.getLogger("honestsets")

CS_NS = (100, 200, 400, 800, 1600)
CS_ALPHAS = (0.0125, 0.025, 0.05)
REFERENCE = dict(n=200, p=800, s=10, design="toeplitz", b=2.0, lambda_rule="val")
REFERENCE_NSIM = 500
PILOT_B = (0.4, 1.0, 2.6, 5.0)


def package_data_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "data"


def _context(cfg, X) -> str:
    return f"{cfg.design}:n={cfg.n}:p={cfg.p}:s={cfg.s}:{competitors.design_digest(X)}"


def reference_constants(seed: int, n_sim: int = REFERENCE_NSIM, alpha: float = 0.05):
    """``c_o(lambda_val)`` on the whole reference data and ``c_l`` for an empty candidate."""
    cfg = SimConfig(**REFERENCE, alpha=alpha, n_sim_c_o=n_sim, n_sim_c_l=n_sim, master_seed=seed,
                    methods=("oracle_lasso",))
    cal = calibration.SettingCalibration(cfg, cfg.calibration_stream())
    eval_half, fit_half, _ = cal.data()
    full = Dataset.stack(eval_half, fit_half)
    rows = [dict(kind="c_o", context=_context(cfg, full.X), alpha=alpha, seed=seed, n_sim=n_sim,
                 value=repr(cal.c_o_val())),
            dict(kind="c_l", context=_context(cfg, eval_half.X) + ":k=0", alpha=alpha / 2.0, seed=seed,
                 n_sim=n_sim, value=repr(cal.c_l(0)))]
    return rows


def pilot_errors(seed: int, reps: int, alpha: float = 0.05, n_sim_c_o: int = 200):
    """Lasso errors at the CV and one-SE tuning in units of ``c_o(lambda_val) sigma^2 s ln p``.

    Pilot settings cover every design with ``b > 0.3`` and uniform coefficients.
    """
    q = {"cv_min": [], "cv_1se": []}
    sid = 0
    for design in DESIGNS:
        for b in PILOT_B:
            sid += 1
            cfg = SimConfig(design=design, b=b, lambda_rule="val", alpha=alpha, master_seed=seed,
                            setting_id=sid, n_sim_c_o=n_sim_c_o, methods=("oracle_lasso",))
            c_o = calibration.SettingCalibration(cfg, cfg.calibration_stream()).c_o_val()
            for r in range(reps):
                base = cfg.stream(r)
                d, dp, beta = sample_dataset(cfg, base.child(0))
                full = Dataset.stack(d, dp)
                cv = solvers.cross_validate(full.X, full.y, base.child(2), folds=cfg.folds)
                unit = c_o * cfg.sigma2 * cfg.s * math.log(cfg.p)
                for kind, lam in (("cv_min", cv.lambda_min), ("cv_1se", cv.lambda_1se)):
                    resid = full.X @ (solvers.lasso(full.X, full.y, lam).coefficients - beta)
                    q[kind].append(float(resid @ resid) / unit)
            log.info("pilot %s b=%.1f done (c_o=%.3f)", design, b, c_o)
    return {k: np.asarray(v) for k, v in q.items()}


def regenerate(out_dir, pilot_reps: int = 10, skip_pilot: bool = False, seed: int = 2024):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cs_path = out / "cs_constants.csv"
    stein.write_golden(cs_path, CS_NS, CS_ALPHAS)

    rows = reference_constants(seed)
    if skip_pilot:
        rows += [r for r in calibration.load_calibration_constants() if r["kind"].startswith("eta_")]
    else:
        alpha = 0.05
        q = pilot_errors(seed, pilot_reps, alpha)
        for kind, draws in q.items():
            rows.append(dict(kind=f"eta_{kind}", context=f"{calibration.PILOT_CONTEXT}:reps={pilot_reps}",
                             alpha=alpha, seed=seed, n_sim=len(draws),
                             value=repr(competitors.choose_eta(draws, alpha))))
    cal_path = out / "calibration_constants.csv"
    calibration.write_calibration_constants(cal_path, rows)
    return [cs_path, cal_path]


"""Per-setting calibration of the lasso-based competitors and the frozen golden constants."""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .. import competitors, solvers
from ..confset import CandidateSet
from ..dataset import Dataset
from ..errors import CalibrationError
from ..numkit import RngStream
from .design import sample_dataset

CALIBRATION_COLUMNS = ("kind", "context", "alpha", "seed", "n_sim", "value")
PILOT_CONTEXT = "pilot"


def _data_text(name):
    try:
        return resources.files("honestsets.data").joinpath(name).read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return None


def load_calibration_constants() -> list[dict]:
    text = _data_text("calibration_constants.csv")
    if text is None:
        return []
    return list(csv.DictReader(text.splitlines()))


def golden_eta(kind: str, alpha: float) -> float:
    """Frozen pilot factor ``eta`` for ``kind`` in {"cv_min", "cv_1se"}."""
    for row in load_calibration_constants():
        if row["kind"] == f"eta_{kind}" and math.isclose(float(row["alpha"]), alpha):
            return float(row["value"])
    raise CalibrationError(f"no frozen eta for {kind} at alpha={alpha}; run `honestsets calibrate`")


def write_calibration_constants(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CALIBRATION_COLUMNS)
        for r in rows:
            w.writerow([r[c] for c in CALIBRATION_COLUMNS])


# ---------------------------------------------------------------------------
# per-setting calibration
# ---------------------------------------------------------------------------

# stream tags below the calibration stream of a setting
_TAG_DATA, _TAG_C_O, _TAG_C_L = 0, 1, 2


@dataclass
class SettingCalibration:
    """Calibration constants of one setting, computed on a dedicated dataset that
    is independent of every replicate.

    ``c_o`` (whole-data lasso, level alpha) is computed eagerly on request;
    ``c_l(k)`` (two-step lasso, level alpha/2) is computed per rank ``k`` on
    first use and cached.  Both are deterministic functions of the config.
    """

    config: object
    stream: RngStream
    _c_l: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _data: tuple | None = None

    def data(self):
        if self._data is None:
            self._data = sample_dataset(self.config, self.stream.child(_TAG_DATA))
        return self._data

    def c_o_val(self) -> float:
        cfg = self.config
        if cfg.s == 0:
            return 0.0
        eval_half, fit_half, _ = self.data()
        full = Dataset.stack(eval_half, fit_half)
        lam = solvers.theoretical_lambda(full.sigma, full.n, full.p)
        b = competitors.signal_bound(full.X, full.y)
        return competitors.calibrate_c_o(full.X, lam, cfg.s, cfg.alpha, cfg.n_sim_c_o,
                                         self.stream.child(_TAG_C_O), b, cfg.sigma2).value

    def c_l(self, k: int) -> float:
        with self._lock:
            if k not in self._c_l:
                self._c_l[k] = self._compute_c_l(k)
            return self._c_l[k]

    def _compute_c_l(self, k: int) -> float:
        cfg = self.config
        eval_half, fit_half, beta = self.data()
        # a rank-k candidate of true strong signals: the k largest |beta_j|
        order = np.argsort(-np.abs(beta), kind="stable")[:k]
        cand = CandidateSet.from_indices(eval_half.X, order)
        rest = np.setdiff1d(np.arange(cfg.p), order)
        X2 = competitors.projected_design(eval_half.X[:, rest], cand.basis)
        lam = competitors.lambda_two_step(cfg.K, cfg.nu, cfg.sigma2, cfg.p, cfg.n, k, cfg.sigma_power)
        return competitors.estimate_cl(X2, fit_half.X, fit_half.y, cfg.s - k, lam, cfg.alpha / 2.0,
                                       cfg.n_sim_c_l, self.stream.child(_TAG_C_L).child(k),
                                       cfg.sigma2).value


def eta_for(rule: solvers.LambdaRule, config) -> float:
    if rule.kind == "theoretical":
        return 1.0
    override = config.eta_cv if rule.kind == "cv_min" else config.eta_1se
    return float(override) if override is not None else golden_eta(rule.kind, config.alpha)

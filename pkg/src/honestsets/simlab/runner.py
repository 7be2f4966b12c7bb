"""Replicate runner: one setting (or a grid of them) to per-method trial records."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .. import competitors, confset, solvers, stein
from ..confset import BallCS, CandidateSet
from ..dataset import Dataset
from ..errors import DomainError
from ..numkit import RngStream
from . import calibration
from .design import BETA_MODES, DESIGNS, sample_dataset

METHODS = ("stein_vol", "stein_diam", "adaptive", "oracle_lasso", "tsl_vol", "tsl_diam", "naive")
_GENERIC = {"stein": ("stein_vol", "stein_diam"), "tsl": ("tsl_vol", "tsl_diam")}
STREAM_STRIDE = 10**6
CALIBRATION_SLOT = STREAM_STRIDE - 1
# stream tags below a replicate stream
_TAG_DATA, _TAG_CV, _TAG_CV_FULL = 0, 1, 2

THREADS_ENV = "HONESTSETS_THREADS"


@dataclass(frozen=True)
class SimConfig:
    n: int = 200
    p: int = 800
    s: int = 10
    sigma2: float = 1.0
    design: str = "toeplitz"
    beta_mode: str = "uniform"
    b: float = 2.0
    alpha: float = 0.05
    lambda_rule: str = "1se"
    methods: tuple = ("stein_vol",)
    criterion: str = "volume"
    a_grid: tuple = confset.A_GRID
    replicates: int = 100
    master_seed: int = 42
    strict_multi: bool = False
    setting_id: int = 0
    E: float = confset.DEFAULT_E
    folds: int = 10
    K: float = competitors.DEFAULT_K
    nu: float = competitors.DEFAULT_NU
    sigma_power: int = 2
    n_sim_c_o: int = 200
    n_sim_c_l: int = 200
    eta_cv: float | None = None
    eta_1se: float | None = None
    timing: bool = False

    def __post_init__(self):
        if isinstance(self.methods, str):
            object.__setattr__(self, "methods", tuple(m for m in self.methods.split(",") if m))
        if self.criterion not in confset.CRITERIA:
            raise DomainError(f"criterion must be one of {confset.CRITERIA}")
        resolved = []
        for m in self.methods:
            m = m.strip()
            if m in _GENERIC:
                m = _GENERIC[m][0 if self.criterion == "volume" else 1]
            if m not in METHODS:
                raise DomainError(f"unknown method {m!r}; choose from {METHODS}")
            if m not in resolved:
                resolved.append(m)
        if not resolved:
            raise DomainError("no methods requested")
        object.__setattr__(self, "methods", tuple(resolved))
        object.__setattr__(self, "a_grid", tuple(float(a) for a in self.a_grid))
        object.__setattr__(self, "lambda_rule", solvers.LambdaRule.parse(self.lambda_rule, self.folds).short)
        if self.design not in DESIGNS:
            raise DomainError(f"design must be one of {DESIGNS}")
        if self.beta_mode not in BETA_MODES:
            raise DomainError(f"beta mode must be one of {BETA_MODES}")
        if not (1 <= self.n and 1 <= self.p and 0 <= self.s <= self.p):
            raise DomainError("need n, p >= 1 and 0 <= s <= p")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if not self.b > 0:
            raise DomainError("b must be positive")
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        if not 1 <= self.replicates < CALIBRATION_SLOT:
            raise DomainError(f"replicates must lie in [1, {CALIBRATION_SLOT})")
        if self.setting_id < 0 or self.master_seed < 0:
            raise DomainError("seed and setting id must be non-negative")

    @property
    def rule(self) -> solvers.LambdaRule:
        return solvers.LambdaRule.parse(self.lambda_rule, self.folds)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("methods", "a_grid"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        d["a_grid"] = list(self.a_grid)
        return d

    def stream(self, replicate: int) -> RngStream:
        return RngStream(self.master_seed, self.setting_id * STREAM_STRIDE + replicate)

    def calibration_stream(self) -> RngStream:
        return RngStream(self.master_seed, self.setting_id * STREAM_STRIDE + CALIBRATION_SLOT)


@dataclass(frozen=True)
class TrialRecord:
    setting_id: int
    replicate: int
    method: str
    covered: int
    r_bar: float
    r_A: float
    r_perp: float
    k: int
    m_star: int
    wall_ms: int

    FIELDS = ("setting_id", "replicate", "method", "covered", "r_bar", "r_A", "r_perp", "k",
              "m_star", "wall_ms")


@dataclass(frozen=True)
class ErrorRecord:
    setting_id: int
    replicate: int
    method: str
    error: str
    message: str

    FIELDS = ("setting_id", "replicate", "method", "error", "message")


class RunOutput(NamedTuple):
    records: list
    errors: list


def _record(cfg, r, method, cs, mu, wall_ms):
    covered = int(confset.contains(cs, mu))
    g = confset.geometry(cs)
    if isinstance(cs, BallCS):
        return TrialRecord(cfg.setting_id, r, method, covered, cs.radius, 0.0, cs.radius, 0, -1, wall_ms)
    return TrialRecord(cfg.setting_id, r, method, covered, g.geo_avg_radius, cs.r_A, cs.r_perp,
                       cs.k, cs.m, wall_ms)


class _Replicate:
    """Shared, lazily computed pieces of one replicate."""

    def __init__(self, cfg: SimConfig, r: int, calib):
        self.cfg, self.r, self.calib = cfg, r, calib
        base = cfg.stream(r)
        self.base = base
        self.data, self.fit_half, self.beta = sample_dataset(cfg, base.child(_TAG_DATA))
        self.mu = self.data.X @ self.beta
        self._fit = None
        self._cands = {}

    def fit(self):
        # half-sample lasso shared by the Stein, adaptive and two-step lasso sets
        if self._fit is None:
            h = self.fit_half
            lam = solvers.select_lambda(h.X, h.y, h.sigma, self.cfg.rule, self.base.child(_TAG_CV))
            self._fit = (solvers.lasso(h.X, h.y, lam).coefficients, lam)
        return self._fit

    def candidate(self, idx):
        if idx not in self._cands:
            self._cands[idx] = CandidateSet.from_indices(self.data.X, idx)
        return self._cands[idx]

    def build(self, method):
        cfg = self.cfg
        if method == "naive":
            return confset.naive_chi2_ball(self.data.y, cfg.sigma2, cfg.alpha), self.mu
        if method in ("stein_vol", "stein_diam"):
            crit = "volume" if method == "stein_vol" else "diameter"
            beta_hat, lam = self.fit()
            idxs = confset.generate_candidates(beta_hat, lam, cfg.a_grid)
            # the empty set (a ball at the Stein estimate) is always on offer, so a dense
            # signal whose lasso coefficients all exceed the top threshold can still fall back to it
            if () not in idxs:
                idxs.append(())
            cs_const = stein.get_cs(cfg.n, cfg.alpha / 2.0)
            M = len(idxs) if cfg.strict_multi else None
            sets = [confset.build_two_step(self.data, self.candidate(idx), cfg.alpha, crit, cs_const,
                                           cfg.E, multi_M=M, m=m)
                    for m, idx in enumerate(idxs)]
            return confset.select_best(sets, crit), self.mu
        if method == "adaptive":
            beta_hat, lam = self.fit()
            return competitors.adaptive_cs(self.fit_half, self.data, cfg.rule, cfg.alpha,
                                           beta_hat=beta_hat, lam=lam), self.mu
        if method == "oracle_lasso":
            full = Dataset.stack(self.data, self.fit_half)
            c_o = self.calib.c_o(cfg.rule)
            lam = solvers.select_lambda(full.X, full.y, full.sigma, cfg.rule, self.base.child(_TAG_CV_FULL))
            ball = competitors.oracle_lasso_cs(full, cfg.s, cfg.rule, cfg.alpha, c_o, lam=lam)
            return ball, full.X @ self.beta
        if method in ("tsl_vol", "tsl_diam"):
            crit = "volume" if method == "tsl_vol" else "diameter"
            beta_hat, lam = self.fit()
            return competitors.two_step_lasso_cs(
                self.fit_half, self.data, cfg.s, cfg.alpha, crit, cfg.rule, self.calib.c_l,
                cfg.K, cfg.nu, cfg.a_grid, beta_hat=beta_hat, lam=lam,
                sigma_power=cfg.sigma_power), self.mu
        raise DomainError(f"unknown method {method!r}")


class _Calibrations:
    """Calibration view handed to replicates: frozen ``c_o(lambda_val)`` plus lazy ``c_l``."""

    def __init__(self, cfg, c_o_val):
        self.cfg = cfg
        self.c_o_val = c_o_val
        self._setting = calibration.SettingCalibration(cfg, cfg.calibration_stream())

    def c_o(self, rule):
        if self.c_o_val is None:
            self.c_o_val = self._setting.c_o_val()
        return self.c_o_val * calibration.eta_for(rule, self.cfg)

    def c_l(self, k):
        return self._setting.c_l(k)


# calibrations reused by all replicates of a setting within one process
_CALIB_CACHE: dict = {}


def _calibrations(cfg, c_o_val):
    key = (json.dumps(cfg.to_dict(), sort_keys=True), c_o_val)
    hit = _CALIB_CACHE.get(key)
    if hit is None:
        if len(_CALIB_CACHE) > 8:
            _CALIB_CACHE.clear()
        hit = _CALIB_CACHE[key] = _Calibrations(cfg, c_o_val)
    return hit


def run_replicate(cfg: SimConfig, r: int, c_o_val: float | None = None) -> RunOutput:
    """All requested methods on replicate ``r``; failures become error rows."""
    records, errors = [], []
    with threadpool_limits(1):
        try:
            rep = _Replicate(cfg, r, _calibrations(cfg, c_o_val))
        except Exception as exc:  # the whole replicate is lost
            return RunOutput([], [ErrorRecord(cfg.setting_id, r, m, type(exc).__name__, str(exc))
                                  for m in cfg.methods])
        for method in cfg.methods:
            t0 = time.perf_counter()
            try:
                cs, mu = rep.build(method)
                wall = int(round(1000 * (time.perf_counter() - t0))) if cfg.timing else 0
                records.append(_record(cfg, r, method, cs, mu, wall))
            except Exception as exc:
                errors.append(ErrorRecord(cfg.setting_id, r, method, type(exc).__name__, str(exc)))
    return RunOutput(records, errors)


def _run_task(task):
    cfg, r, c_o_val = task
    return run_replicate(cfg, r, c_o_val)


def _c_o_task(cfg):
    with threadpool_limits(1):
        return calibration.SettingCalibration(cfg, cfg.calibration_stream()).c_o_val()


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise DomainError(f"{THREADS_ENV} must be a positive integer")
    return threads


def _sort_key(rec):
    return (rec.setting_id, rec.replicate, rec.method)


def run_grid(configs: Sequence[SimConfig], threads: int | None = None) -> RunOutput:
    """Run every replicate of every setting in a process pool; output order is sorted
    on (setting_id, replicate, method) and independent of scheduling."""
    threads = thread_count(threads)
    ids = [c.setting_id for c in configs]
    if len(set(ids)) != len(ids):
        raise DomainError("setting ids must be distinct")
    need_c_o = [c for c in configs if "oracle_lasso" in c.methods]
    if threads == 1:
        c_o = [_c_o_task(c) for c in need_c_o]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            c_o = list(pool.map(_c_o_task, need_c_o))
    c_o_by_id = {c.setting_id: v for c, v in zip(need_c_o, c_o)}
    tasks = [(c, r, c_o_by_id.get(c.setting_id)) for c in configs for r in range(c.replicates)]
    if threads == 1:
        outs = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * threads))))
    records = sorted((rec for o in outs for rec in o.records), key=_sort_key)
    errors = sorted((e for o in outs for e in o.errors), key=_sort_key)
    return RunOutput(records, errors)


def run_setting(config: SimConfig, threads: int | None = None) -> RunOutput:
    return run_grid([config], threads)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    setting_id: int
    method: str
    n_trials: int
    n_errors: int
    coverage: float
    mean_r_bar: float
    mean_k: float

    FIELDS = ("setting_id", "method", "n_trials", "n_errors", "coverage", "mean_r_bar", "mean_k")


def aggregate(records, errors=()) -> list[SummaryRow]:
    """Coverage rate, mean ``r_bar`` and mean ``k`` per (setting, method); error rows counted apart."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.setting_id, rec.method), []).append(rec)
    n_err: dict = {}
    for e in errors:
        key = (e.setting_id, e.method)
        n_err[key] = n_err.get(key, 0) + 1
        groups.setdefault(key, [])
    out = []
    for key in sorted(groups):
        recs = groups[key]
        m = len(recs)
        if m:
            cov = math.fsum(r.covered for r in recs) / m
            rbar = math.fsum(r.r_bar for r in recs) / m
            kbar = math.fsum(r.k for r in recs) / m
        else:
            cov = rbar = kbar = math.nan
        out.append(SummaryRow(key[0], key[1], m, n_err.get(key, 0), cov, rbar, kbar))
    return out

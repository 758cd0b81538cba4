"""Reproducible parallel ensembles of paths and probability estimates.

Each path owns the seed pair derived from (master_seed, path_index), so a
run is deterministic for any worker count; per-path records are collected
by index and reduced in a fixed order.  Probability estimators reuse the
same per-path noise across query times (common random numbers), which
makes nested events produce monotone estimates.  Binomial uncertainty is
reported as Wilson score intervals, which stay honest near 0 and 1 where
these events live.

Infinite-horizon events are approximated at a finite horizon t_max with
the bias direction documented per estimator: truncation shrinks the
integral, enlarging the event, so truncated estimates upper-bound the
corresponding infinite-horizon probabilities.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
from scipy.special import ndtri

from . import bounds as bnd
from .fbm import FbmPathPair, TimeGrid, sample_fbm_pair, zero_path_pair
from .model import DerivedConstants, InitialData, ModelParams, derive_constants
from .stable import StableProfile, build_profile, default_r0


class HypothesisViolated(ValueError):
    """Raised when an estimator's premises (sign of k_{1,2}, window size,
    the coupling condition, or H = 1/2) do not hold."""


def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = float(ndtri(0.5 + level / 2.0))
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class EnsembleConfig:
    """Inputs of a Monte Carlo run (model, initial data, grid, seeding)."""

    params: ModelParams
    init: InitialData
    grid: TimeGrid
    n_paths: int
    master_seed: int
    query_times: tuple[float, ...] = ()
    r0_override: float | None = None
    confidence: float = 0.95
    t_max_infinite: float | None = None  # horizon standing in for +infinity
    zero_noise: bool = False  # test hook: degenerate B == 0 ensemble

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if any(t <= 0.0 for t in self.query_times):
            raise ValueError("query times must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")


def _resolve_profile(config: EnsembleConfig, profile: StableProfile | None) -> StableProfile:
    if profile is not None:
        return profile
    return build_profile(config.params.alpha, config.params.d)


def _path_for(config: EnsembleConfig, index: int) -> FbmPathPair:
    if config.zero_noise:
        return zero_path_pair(config.grid, config.params.H)
    return sample_fbm_pair(config.params.H, config.grid, config.master_seed, index)


# --- worker plumbing (module-level so it pickles under multiprocessing) ----

_STATE: dict = {}


def _init_worker(payload):
    _STATE.clear()
    _STATE.update(payload)


def _bounds_worker(index: int):
    cfg = _STATE["config"]
    try:
        paths = _path_for(cfg, index)
        rec = bnd.compute_bounds(
            paths,
            cfg.params,
            _STATE["derived"],
            cfg.init,
            _STATE["profile"],
            r0=_STATE["r0"],
        )
        return index, rec.to_dict(), None
    except Exception as exc:  # per-path failures are tallied, not fatal
        return index, None, f"{type(exc).__name__}: {exc}"


def _kernel_min_g_window(paths, ka):
    """Event vector: cumulative min-g integral from eta below the threshold
    at each window end."""
    derived = ka["derived"]
    tss, cum = bnd.min_g_cumulative(
        paths, ka["params"], derived, (derived.rho1, derived.rho2), ka["eta"]
    )
    vals = np.interp(ka["windows"], tss, cum)
    return vals < ka["threshold"]


def _kernel_both_integrals_below(paths, ka):
    """Event: both tau_star-type integrals on [0, t_max] below the threshold."""
    if ka["divergent"]:
        return np.asarray([False])
    derived = ka["derived"]
    ok = True
    for q, c in zip(ka["qs"], ka["drifts"]):
        _, cum = bnd.exp_integral(
            paths, derived.rho1, derived.rho2, c, q, 0.0, ka["t_max"]
        )
        ok = ok and bool(cum[-1] < ka["threshold"])
    return np.asarray([ok])


_KERNELS = {
    "min-g-window": _kernel_min_g_window,
    "both-integrals-below": _kernel_both_integrals_below,
}


def _event_worker(index: int):
    cfg = _STATE["config"]
    kernel = _KERNELS[_STATE["kernel_name"]]
    try:
        paths = _path_for(cfg, index)
        return index, kernel(paths, _STATE["kernel_args"]), None
    except Exception as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def _run_indexed(config: EnsembleConfig, payload: dict, worker, workers: int):
    """Run ``worker`` over all path indices, deterministically ordered."""
    indices = range(config.n_paths)
    if workers in (0, None):
        workers = os.cpu_count() or 1
    if workers == 1:
        _init_worker(payload)
        results = [worker(i) for i in indices]
    else:
        ctx = get_context("fork")
        chunk = max(1, config.n_paths // (workers * 8))
        with ctx.Pool(workers, initializer=_init_worker, initargs=(payload,)) as pool:
            results = pool.map(worker, indices, chunksize=chunk)
    results.sort(key=lambda item: item[0])
    return results


# ---------------------------------------------------------------------------
# ensemble of bound records


_QUANTS = (0.05, 0.25, 0.50, 0.75, 0.95)


def _quantiles(values: list[float]) -> dict:
    if not values:
        return {f"q{int(100 * q):02d}": None for q in _QUANTS}
    arr = np.sort(np.asarray(values))
    return {f"q{int(100 * q):02d}": float(np.quantile(arr, q)) for q in _QUANTS}


@dataclass
class EnsembleSummary:
    config_echo: dict
    n_paths: int
    excluded: int
    errors: list
    quantiles: dict
    fraction_finite: dict
    probabilities: list
    records: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config_echo": self.config_echo,
            "n_paths": self.n_paths,
            "excluded": self.excluded,
            "errors": self.errors,
            "quantiles": self.quantiles,
            "fraction_finite": self.fraction_finite,
            "probabilities": self.probabilities,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _config_echo(config: EnsembleConfig, r0: float) -> dict:
    p = config.params
    echo = {
        "alpha": p.alpha, "d": p.d, "H": p.H,
        "beta1": p.beta1, "beta2": p.beta2,
        "gamma1": p.gamma1, "gamma2": p.gamma2,
        "k": [list(row) for row in p.k],
        "grid": {"t_end": config.grid.t_end, "n_steps": config.grid.n_steps},
        "n_paths": config.n_paths,
        "master_seed": config.master_seed,
        "query_times": list(config.query_times),
        "confidence": config.confidence,
        "r0": r0,
        "zero_noise": config.zero_noise,
        "init_kind": config.init.kind,
    }
    if config.init.kind == "scaled":
        echo["C1"] = config.init.c1
        echo["C2"] = config.init.c2
        echo["psi_sup"] = config.init.psi_sup
        echo["psi_l1"] = config.init.psi_l1
    return echo


def run_ensemble(
    config: EnsembleConfig,
    profile: StableProfile | None = None,
    workers: int = 1,
    keep_records: bool = False,
) -> EnsembleSummary:
    """Drive the bounds module over sampled paths and aggregate.

    Deterministic given the master seed regardless of worker count.
    Per-path failures are counted under ``excluded`` and reported, not
    fatal unless every path fails.
    """
    profile = _resolve_profile(config, profile)
    derived = derive_constants(config.params)
    r0 = config.r0_override if config.r0_override is not None else default_r0(profile)
    payload = {"config": config, "derived": derived, "profile": profile, "r0": r0}
    results = _run_indexed(config, payload, _bounds_worker, workers)

    records, errors = [], []
    for index, rec, err in results:
        if err is not None:
            errors.append({"path": index, "error": err})
        else:
            records.append((index, rec))
    if not records:
        raise RuntimeError(f"all {config.n_paths} paths failed; first error: {errors[0]}")

    def finite_times(key):
        out = []
        for _, rec in records:
            entry = rec[key]
            if key == "tau_upper":
                if entry is not None:
                    out.append(entry)
            elif entry is not None and entry["status"] == bnd.CROSSED:
                out.append(entry["time"])
        return out

    quantiles = {}
    fraction = {}
    for key in ("tau_star", "theta", "tau_upper"):
        vals = finite_times(key)
        quantiles[key] = _quantiles(vals)
        fraction[key] = len(vals) / len(records)

    return EnsembleSummary(
        config_echo=_config_echo(config, r0),
        n_paths=config.n_paths,
        excluded=len(errors),
        errors=errors[:10],
        quantiles=quantiles,
        fraction_finite=fraction,
        probabilities=[],
        records=records if keep_records else [],
    )


# ---------------------------------------------------------------------------
# probability estimators


@dataclass
class ProbabilityEstimate:
    name: str
    t: float
    estimate: float
    ci_lo: float
    ci_hi: float
    bias_note: str
    n_effective: int
    excluded: int
    worst_case: tuple[float, float]
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "t": self.t,
            "estimate": self.estimate,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "bias_note": self.bias_note,
            "n_effective": self.n_effective,
            "excluded": self.excluded,
            "worst_case": list(self.worst_case),
            **self.extra,
        }


def _estimate_events(config, payload, workers, name, ts, bias_note, extra=None):
    """Shared reduction: per-path boolean vectors -> Wilson estimates per t."""
    results = _run_indexed(config, payload, _event_worker, workers)
    flags, excluded = [], 0
    for _, vec, err in results:
        if err is not None:
            excluded += 1
        else:
            flags.append(vec)
    out = []
    arr = np.asarray(flags, dtype=bool) if flags else np.zeros((0, len(ts)), bool)
    n_eff = arr.shape[0]
    total = n_eff + excluded
    for j, t in enumerate(ts):
        k = int(arr[:, j].sum()) if n_eff else 0
        est = k / n_eff if n_eff else math.nan
        lo, hi = wilson_interval(k, n_eff, config.confidence)
        worst = (
            k / total if total else math.nan,
            (k + excluded) / total if total else math.nan,
        )
        out.append(
            ProbabilityEstimate(
                name=name, t=float(t), estimate=est, ci_lo=lo, ci_hi=hi,
                bias_note=bias_note, n_effective=n_eff, excluded=excluded,
                worst_case=worst, extra=dict(extra or {}),
            )
        )
    return out


def _theta_threshold(params, derived, r1, r2, r0):
    if params.beta1 == params.beta2:
        return bnd.theta_one_threshold(params, derived, r1, r2, r0)
    eps0, ok = bnd.epsilon_zero(params, derived, r1, r2, r0)
    if not ok:
        raise HypothesisViolated("epsilon_0 smallness condition fails for these inputs")
    return bnd.theta_two_threshold(params, derived, r1, r2, r0, eps0)


def _nonexplosion_setup(config, profile):
    profile = _resolve_profile(config, profile)
    derived = derive_constants(config.params)
    if not derived.coupling_ok:
        raise HypothesisViolated("the probability bounds assume the coupling condition")
    if derived.k12_drift >= 0.0:
        raise HypothesisViolated(
            f"k_(1,2) = {derived.k12_drift} >= 0: the non-explosion bound needs k_(1,2) < 0"
        )
    r0 = config.r0_override if config.r0_override is not None else default_r0(profile)
    r1, r2 = bnd.r_constants(profile, derived, config.init, r0)
    eta = bnd.eta_constant(config.params, derived, r0)
    thr = _theta_threshold(config.params, derived, r1, r2, r0)
    return profile, derived, r0, r1, r2, eta, thr


def prob_nonexplosion_upper(
    config: EnsembleConfig,
    query_times=None,
    profile: StableProfile | None = None,
    workers: int = 1,
) -> list[ProbabilityEstimate]:
    """Monte Carlo estimate of the non-explosion upper bound at finite t:
    the probability that int_eta^{t/(1+2^alpha) - r0} min(g_{1,2}, g_{2,1}) ds
    stays below the theta threshold.  Requires k_{1,2} < 0 and
    t > 5 (eta + r0)."""
    ts = tuple(query_times) if query_times is not None else config.query_times
    if not ts:
        raise ValueError("no query times given")
    profile, derived, r0, r1, r2, eta, thr = _nonexplosion_setup(config, profile)
    factor = 1.0 + 2.0 ** config.params.alpha
    windows = []
    for t in ts:
        if t <= 5.0 * (eta + r0):
            raise HypothesisViolated(
                f"query time {t} too small: the bound needs t > 5(eta + r0) = {5 * (eta + r0):.6g}"
            )
        w = t / factor - r0
        if w > config.grid.t_end:
            raise ValueError(
                f"window end {w:.6g} for t={t} exceeds the grid horizon {config.grid.t_end}"
            )
        windows.append(w)

    payload = {
        "config": config,
        "kernel_name": "min-g-window",
        "kernel_args": {
            "params": config.params,
            "derived": derived,
            "eta": eta,
            "windows": np.asarray(windows),
            "threshold": thr,
        },
    }
    return _estimate_events(
        config, payload, workers,
        name="nonexplosion-upper", ts=ts,
        bias_note="finite-window event evaluated exactly on the grid; no horizon bias",
        extra={"eta": eta, "threshold": thr, "r0": r0},
    )


def prob_nonexplosion_upper_infinite(
    config: EnsembleConfig,
    t_max: float | None = None,
    profile: StableProfile | None = None,
    workers: int = 1,
) -> ProbabilityEstimate:
    """Infinite-horizon analogue at H = 1/2: window [eta, t_max] stands in
    for [eta, infinity).  The truncated integral is smaller, the event
    larger, so the estimate conservatively upper-bounds the target."""
    if config.params.H != 0.5:
        raise HypothesisViolated("the infinite-horizon bound is stated at H = 1/2")
    profile, derived, r0, r1, r2, eta, thr = _nonexplosion_setup(config, profile)
    if t_max is None:
        base = max(config.query_times) if config.query_times else config.grid.t_end / 10.0
        t_max = config.t_max_infinite if config.t_max_infinite is not None else 10.0 * base
    t_max = min(t_max, config.grid.t_end)

    payload = {
        "config": config,
        "kernel_name": "min-g-window",
        "kernel_args": {
            "params": config.params,
            "derived": derived,
            "eta": eta,
            "windows": np.asarray([t_max]),
            "threshold": thr,
        },
    }
    [est] = _estimate_events(
        config, payload, workers,
        name="nonexplosion-upper-infinite", ts=(t_max,),
        bias_note=(
            "horizon truncation shrinks the integral and enlarges the event: "
            "the estimate is an upper bound of the infinite-horizon bound"
        ),
        extra={"eta": eta, "threshold": thr, "r0": r0},
    )
    return est


def prob_global_lower(
    config: EnsembleConfig,
    t_max: float | None = None,
    profile: StableProfile | None = None,
    workers: int = 1,
) -> ProbabilityEstimate:
    """Lower bound on the probability of no explosion of the lower-bound
    time: both weighted integrals (horizon t_max) stay below
    min_i 1/(beta_i p(1,0)^{beta_i} ||f_i||_1^{beta_i}).  Truncation biases
    the estimate upward relative to the infinite-horizon event."""
    profile = _resolve_profile(config, profile)
    derived = derive_constants(config.params)
    if not derived.coupling_ok:
        raise HypothesisViolated("the global lower bound assumes the coupling condition")
    if t_max is None:
        t_max = config.t_max_infinite if config.t_max_infinite is not None else config.grid.t_end
    t_max = min(t_max, config.grid.t_end)
    params = config.params
    p10 = profile.p10
    thr = min(
        1.0 / (params.beta1 * (p10 * config.init.l1_norm(1)) ** params.beta1),
        1.0 / (params.beta2 * (p10 * config.init.l1_norm(2)) ** params.beta2),
    )
    qs = [params.d * params.beta1 / params.alpha, params.d * params.beta2 / params.alpha]
    drifts = [derived.n1 * params.beta1, derived.n2 * params.beta2]
    divergent = any(q >= 1.0 for q in qs)

    payload = {
        "config": config,
        "kernel_name": "both-integrals-below",
        "kernel_args": {
            "derived": derived,
            "qs": qs,
            "drifts": drifts,
            "t_max": t_max,
            "threshold": thr,
            "divergent": divergent,
        },
    }
    [est] = _estimate_events(
        config, payload, workers,
        name="global-lower", ts=(t_max,),
        bias_note=(
            "truncated integrals are below their infinite-horizon limits, so the "
            "estimate is biased upward relative to the infinite-horizon event"
            + ("; integrand not integrable at 0 (d beta_i/alpha >= 1): event is empty"
               if divergent else "")
        ),
        extra={"threshold": thr},
    )
    return est

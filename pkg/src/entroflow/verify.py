"""Pass/fail verdicts: envelope checks, rate fits, inequality audits.

Every verdict carries a signed worst violation (negative means the property
was broken beyond tolerance) and is deterministic given config and seed.  The
default slack tolerance is 1e-8 relative and can be overridden through the
ENTROFLOW_TOL environment variable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonPositiveData, ParameterError, WindowTooShort
from .functionals import LinearParams
from .grid import Grid, dirichlet_form, gradient_sq, integrate_dgamma
from .spectrum import lambda1_linear

__all__ = [
    "Verdict",
    "default_slack_tol",
    "check_envelope",
    "fit_exponential_rate",
    "poincare_test",
    "dissipation_audit",
    "refined_inequality_audit",
]

_TINY = 1e-300


def default_slack_tol() -> float:
    """Relative slack tolerance; ENTROFLOW_TOL overrides the 1e-8 default."""
    raw = os.environ.get("ENTROFLOW_TOL")
    if raw is None:
        return 1e-8
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"ENTROFLOW_TOL={raw!r} is not a float") from exc


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check.  pass <=> worst_violation >= -tolerance."""

    name: str
    passed: bool
    worst_violation: float
    location: float | int | None
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "location": self.location,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def _verdict(name, worst, location, tol, details=None) -> Verdict:
    return Verdict(
        name=name,
        passed=bool(worst >= -tol),
        worst_violation=float(worst),
        location=location,
        tolerance=tol,
        details=details or {},
    )


def check_envelope(trace, envelope, column: str = "E", name: str | None = None,
                   tol: float | None = None) -> Verdict:
    """Worst relative slack of bound(t) - value(t) over the trace snapshots."""
    tol = default_slack_tol() if tol is None else tol
    values = trace.column(column)
    bounds = np.array([envelope(t) for t in trace.t])
    scale = np.maximum(np.maximum(np.abs(bounds), np.abs(values)), _TINY)
    slack = (bounds - values) / scale
    k = int(np.argmin(slack))
    return _verdict(
        name or f"envelope[{column}]",
        float(slack[k]),
        float(trace.t[k]),
        tol,
        {"n_snapshots": len(values)},
    )


def _fit_rate(t: np.ndarray, y: np.ndarray) -> float:
    slope, _ = np.polyfit(t, np.log(y), 1)
    return -float(slope)


def fit_exponential_rate(trace, column: str, window: tuple[float, float] | None = None) -> float:
    """Least-squares decay rate of log(column) vs t (negated slope)."""
    t = trace.t
    y = trace.column(column)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, y = t[mask], y[mask]
    if len(t) < 10:
        raise WindowTooShort(f"only {len(t)} snapshots in the fit window; need 10")
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        raise NonPositiveData("log-linear fit needs strictly positive finite data")
    return _fit_rate(t, y)


def _trial_field(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Random positive trial: a few Gaussian bumps plus low-frequency cosines."""
    x = grid.nodes
    span = x[-1] - x[0]
    u = np.zeros(grid.n)
    for _ in range(int(rng.integers(1, 6))):
        center = rng.uniform(x[0] + 0.1 * span, x[-1] - 0.1 * span)
        width = rng.uniform(0.05, 0.2) * span
        u += rng.uniform(-1.0, 1.0) * np.exp(-0.5 * ((x - center) / width) ** 2)
    for j in range(int(rng.integers(1, 4))):
        u += rng.uniform(-0.5, 0.5) * np.cos(math.pi * (j + 1) * (x - x[0]) / span)
    scale = np.max(np.abs(u))
    if scale == 0.0:
        return np.ones(grid.n)
    return np.maximum(u, 0.02 * scale)


def _poincare_slack(grid: Grid, p: float, lam: float, u: np.ndarray) -> float:
    u = u / integrate_dgamma(grid, u)  # scale-invariant; normalize for conditioning
    second = integrate_dgamma(grid, u * u)
    lhs = (
        second - integrate_dgamma(grid, np.power(np.abs(u), 2.0 / p)) ** p
    ) / (p - 1.0)
    rhs = (2.0 / lam) * dirichlet_form(grid, u, u)
    scale = max(abs(rhs), abs(lhs))
    if scale <= 1e-13 * max(1.0, second):
        return 0.0  # both sides at quadrature round-off (e.g. constant trials)
    return (rhs - lhs) / scale


def poincare_test(
    p: float,
    lambda1: float,
    pot,
    grid: Grid,
    trials: int = 100,
    seed: int = 0,
    tol: float | None = None,
    weak_lambda1: float | None = None,
    extra_trials: tuple = (),
) -> Verdict:
    """Interpolation inequality between variance-type entropy and the Dirichlet
    form, tested on seeded random positive trials plus the eigenvector of the
    spectral quotient as trial #0; ``extra_trials`` lets a caller inject
    deliberately near-extremal fields.

    With ``weak_lambda1`` set (e.g. (p-1) * lambda1(2)), the same trials are
    also checked against that constant; the verdict requires both to hold.
    """
    if not (1.0 < p <= 2.0):
        raise ParameterError(f"p must lie in (1, 2]; got {p}")
    if lambda1 <= 0.0:
        raise ParameterError("the inequality needs a positive eigenvalue")
    tol = default_slack_tol() if tol is None else tol
    rng = np.random.default_rng(seed)
    eig = lambda1_linear(p, pot, grid).eigenvector
    trial0 = np.maximum(np.abs(eig), 1e-8 * np.max(np.abs(eig)))
    fields = [trial0] + [np.asarray(u, float) for u in extra_trials]
    fields += [_trial_field(grid, rng) for _ in range(trials)]
    worst, worst_idx = np.inf, None
    weak_worst, weak_idx = np.inf, None
    for i, u in enumerate(fields):
        s = _poincare_slack(grid, p, lambda1, u)
        if s < worst:
            worst, worst_idx = s, i
        if weak_lambda1 is not None:
            sw = _poincare_slack(grid, p, weak_lambda1, u)
            if sw < weak_worst:
                weak_worst, weak_idx = sw, i
    details = {"trials": trials + 1, "seed": seed, "worst_trial": worst_idx}
    combined = worst
    location = worst_idx
    if weak_lambda1 is not None:
        details["weak_worst"] = weak_worst
        details["weak_worst_trial"] = weak_idx
        if weak_worst < combined:
            combined, location = weak_worst, weak_idx
    return _verdict("poincare", combined, location, tol, details)


def _centered_mismatch(t, y, target, scale_floor=_TINY):
    """max_k |(y_{k+1}-y_{k-1})/(t_{k+1}-t_{k-1}) - target_k| / max|target|."""
    if len(t) < 3:
        raise WindowTooShort("dissipation audit needs at least 3 snapshots")
    cd = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    mism = np.abs(cd - target[1:-1])
    scale = max(float(np.max(np.abs(target))), scale_floor)
    rel = mism / scale
    k = int(np.argmax(rel))
    return float(rel[k]), float(t[1 + k])


def dissipation_audit(trace, kind: str | None = None, tol: float | None = None) -> Verdict:
    """Check dE/dt = -I and the second-order identity along a trace.

    The second identity is dI/dt = -(8/p) K for the linear flow and
    dI/dt = -2 m c(m,p) K for the porous-media flow.  The mismatch of centered
    differences is second order in the snapshot spacing; the default tolerance
    scales accordingly.
    """
    kind = kind or trace.config.get("kind")
    p = float(trace.config["p"])
    if kind == "pme":
        from .functionals import PmeParams

        params = PmeParams(m=float(trace.config["m"]), p=p)
        second_coeff = 2.0 * params.m * params.c
    elif kind == "linear":
        second_coeff = 8.0 / p
    else:
        raise ConfigError(f"unknown flow kind {kind!r}")
    t = trace.t
    if np.any(~np.isfinite(trace.K)):
        raise ConfigError("trace has non-finite K entries; cannot audit")
    mis_E, loc_E = _centered_mismatch(t, trace.E, -trace.I)
    mis_I, loc_I = _centered_mismatch(t, trace.I, -second_coeff * trace.K)
    if tol is None:
        # centered-difference truncation ~ (rate * spacing)^2; estimate the rate
        spacing = float(np.median(np.diff(t)))
        pos = trace.I > 0
        if pos.sum() >= 10:
            rate = max(1.0, abs(_fit_rate(t[pos], trace.I[pos])))
        else:
            rate = 1.0
        tol = 3.0 * rate**3 * spacing**2
    worst = -max(mis_E, mis_I)
    loc = loc_E if mis_E >= mis_I else loc_I
    return _verdict(
        "dissipation", worst, loc, tol,
        {"mismatch_entropy": mis_E, "mismatch_fisher": mis_I, "kind": kind},
    )


def refined_inequality_audit(
    trace, p: float, epsilon: float, grid: Grid, tol: float | None = None
) -> Verdict:
    """Snapshot-wise audit of the two degenerate-regime inequalities:

        K_p >= 16 (alpha eps / (1+eps)) int |Dz|^4 dgamma,        z = v^{p/4}
        (p I_p)^2 <= 4^4 (1 + (p-1) E_p) int |Dz|^4 dgamma.

    The quartic gradient term comes from the stored density snapshots (audit
    stride); E, I and K are read off the matching trace rows, so a corrupted
    scalar column is caught.
    """
    if not trace.fields:
        raise ConfigError("trace carries no stored fields; rerun with audit fields")
    if epsilon <= 0.0:
        raise ParameterError("epsilon must be positive")
    tol = default_slack_tol() if tol is None else tol
    alpha = LinearParams(p).alpha
    coeff = 16.0 * alpha * epsilon / (1.0 + epsilon)
    worst, loc = np.inf, None
    count = 0
    for idx, v in trace.fields:
        z = np.power(np.maximum(v, 1e-300), p / 4.0)
        q4 = integrate_dgamma(grid, gradient_sq(grid, z) ** 2)
        E, I, K = float(trace.E[idx]), float(trace.I[idx]), float(trace.K[idx])
        s1 = (K - coeff * q4) / max(abs(K), abs(coeff * q4), _TINY)
        lhs = (p * I) ** 2
        rhs = 256.0 * (1.0 + (p - 1.0) * E) * q4
        s2 = (rhs - lhs) / max(abs(rhs), abs(lhs), _TINY)
        count += 1
        for s in (s1, s2):
            if s < worst:
                worst, loc = s, idx
    return _verdict(
        "refined_inequalities", worst, loc, tol,
        {"epsilon": epsilon, "snapshots": count},
    )

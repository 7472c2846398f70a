"""Smallest eigenvalues of the weighted quotients driving the decay estimates.

Three quotients are discretized, all on the same grid machinery:

* lambda1_linear(p):   inf_w  [ 2(p-1)/p |Dw|^2 + V |w|^2 ] dgamma / |w|^2 dgamma
* lambda1_pme(theta):  inf_w  [ (1-theta) |Dw|^2 + V |w|^2 ] dgamma / |w|^2 dgamma
* lambda1_schrodinger_bound(p): flat-measure ground state obtained through the
  substitution u = w e^{-F/2}, returned as a certified lower bound for
  lambda1_linear(p) up to truncation and discretization error.

The discrete problem is a generalized symmetric pencil A w = lambda M w with
M the diagonal of quadrature weights; the M^{1/2} similarity turns it into a
symmetric tridiagonal matrix.  The smallest eigenvalue is isolated by Sturm
bisection (LDL^T inertia counts) and the eigenvector recovered by shifted
inverse iteration from just below the eigenvalue; tridiagonal solves keep
every step O(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import BoundaryConditionViolated, ParameterError, SolverDiverged
from .grid import Grid
from .potential import (
    Potential,
    evaluate,
    hessian_infimum_V,
    log_weight,
    schrodinger_potential,
)

__all__ = [
    "SpectralResult",
    "lambda1_linear",
    "lambda1_pme",
    "lambda1_schrodinger_bound",
    "epsilon_star",
    "smallest_eigenpair",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SpectralResult:
    """Smallest eigenvalue with its eigenvector and solver diagnostics.

    The eigenvector is normalized to unit norm in the inner product of the
    quotient it came from (dgamma for the weighted quotients, dx for the
    flat-measure bound).  ``residual`` is the 2-norm of the symmetrized
    operator residual; ``tol`` is the effective tolerance it was held to,
    i.e. the requested tolerance floored at the round-off level of one
    matrix-vector product.
    """

    lam: float
    eigenvector: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    tol: float = 1e-10

    def __float__(self) -> float:
        return self.lam


def _sturm_count(diag: np.ndarray, off2: np.ndarray, sigma: float) -> int:
    """Number of eigenvalues strictly below sigma (LDL^T inertia count)."""
    count = 0
    t = diag[0] - sigma
    if t < 0.0:
        count += 1
    for k in range(1, len(diag)):
        if t == 0.0:
            t = 1e-300
        t = diag[k] - sigma - off2[k - 1] / t
        if t < 0.0:
            count += 1
    return count


def _tridiag_matvec(diag: np.ndarray, off: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def smallest_eigenpair(
    diag: np.ndarray,
    off: np.ndarray,
    tol: float = 1e-10,
    max_iterations: int = 500,
) -> tuple[float, np.ndarray, float, int, float]:
    """Smallest eigenpair of a symmetric tridiagonal matrix.

    Returns (lam, vector, residual, iterations, effective_tol); the vector has
    unit 2-norm.  Raises SolverDiverged if the residual tolerance (floored at
    the matvec round-off level) cannot be met.
    """
    n = len(diag)
    off2 = off * off
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo = float(np.min(diag - radius))
    hi = float(np.max(diag + radius))
    scale = max(1.0, abs(lo), abs(hi))
    lo -= 1e-12 * scale
    hi += 1e-12 * scale

    iterations = 0
    a, b = lo, hi
    while b - a > 1e-13 * max(1.0, abs(a), abs(b)) and iterations < 120:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        iterations += 1
        if _sturm_count(diag, off2, mid) >= 1:
            b = mid
        else:
            a = mid

    # inverse iteration from just below the eigenvalue: the bracket end with
    # inertia count 0 sits under lambda_1, so convergence is immediate
    sigma = a
    ab = np.zeros((3, n))
    y = 1.0 + 1e-3 * np.sin(0.7 * np.arange(n))  # deterministic start
    y /= np.linalg.norm(y)
    tnorm = float(np.max(np.abs(diag)) + 2.0 * np.max(np.abs(off), initial=0.0))
    tol_eff = max(tol, 8.0 * _EPS * max(1.0, tnorm))
    best_lam, best_x, best_res = sigma, y, np.inf
    stalled = 0
    for _ in range(max_iterations):
        iterations += 1
        ab[0, 1:] = off
        ab[1, :] = diag - sigma
        ab[2, :-1] = off
        try:
            x = solve_banded((1, 1), ab, y, check_finite=False)
        except np.linalg.LinAlgError:
            sigma -= max(1e-12 * max(1.0, abs(sigma)), 1e-300)
            continue
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx == 0.0:
            sigma -= 1e-10 * max(1.0, abs(sigma))
            continue
        x /= nx
        tx = _tridiag_matvec(diag, off, x)
        lam = float(np.dot(x, tx))
        residual = float(np.linalg.norm(tx - lam * x))
        if residual < best_res:
            best_lam, best_x, best_res = lam, x, residual
            stalled = 0
        else:
            stalled += 1
        if best_res <= tol_eff or stalled >= 3:
            break
        y = x
    if best_res > max(tol_eff, 64.0 * _EPS * max(1.0, tnorm)):
        raise SolverDiverged(
            f"inverse iteration residual {best_res:.3e} above tolerance {tol_eff:.1e} "
            f"after {iterations} iterations"
        )
    return best_lam, best_x, best_res, iterations, tol_eff


def _assemble_symmetrized(
    node_mass: np.ndarray,
    conductance: np.ndarray,
    grad_coeff: float,
    V: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric tridiagonal matrix of the quotient

        [ grad_coeff |Dw|^2 + V w^2 ] / [ w^2 ]

    in the inner product weighted by ``node_mass``."""
    n = len(node_mass)
    diag = np.zeros(n)
    diag[:-1] += conductance
    diag[1:] += conductance
    diag = grad_coeff * diag / node_mass + V
    # sqrt factors kept separate: the product of adjacent masses can underflow
    root = np.sqrt(node_mass)
    off = -grad_coeff * conductance / (root[:-1] * root[1:])
    return diag, off


def _solve_quotient(
    grid: Grid,
    grad_coeff: float,
    V: np.ndarray,
    tol: float,
    max_iterations: int,
) -> SpectralResult:
    mass = grid.node_mass
    diag, off = _assemble_symmetrized(mass, grid.conductance, grad_coeff, V)
    lam, y, residual, iterations, tol_eff = smallest_eigenpair(diag, off, tol, max_iterations)
    w = y / np.sqrt(mass / grid.weight_mass)
    if w[int(np.argmax(np.abs(w)))] < 0.0:
        w = -w
    return SpectralResult(
        lam=lam, eigenvector=w, residual=residual, iterations=iterations, tol=tol_eff
    )


def lambda1_linear(
    p: float,
    pot: Potential,
    grid: Grid,
    tol: float = 1e-10,
    max_iterations: int = 500,
) -> SpectralResult:
    """Smallest eigenvalue of  w -> -(2(p-1)/p) Lw + V w  in the weighted measure.

    p = 1 has a vanishing gradient coefficient, so the infimum is the
    essential infimum of V over the grid and is returned directly.
    """
    if not (1.0 <= p <= 2.0):
        raise ParameterError(f"p must lie in [1, 2]; got {p}")
    V = hessian_infimum_V(pot, grid)
    if p == 1.0:
        # the gradient term vanishes: the infimum is ess-inf V, attained by
        # concentration at the minimizing node
        idx = int(np.argmin(V))
        w = np.zeros(grid.n)
        w[idx] = 1.0 / np.sqrt(grid.dgamma_weights[idx])
        return SpectralResult(
            lam=float(V[idx]), eigenvector=w, residual=0.0, iterations=0, tol=tol
        )
    coeff = 2.0 * (p - 1.0) / p
    return _solve_quotient(grid, coeff, V, tol, max_iterations)


def lambda1_pme(
    theta: float,
    pot: Potential,
    grid: Grid,
    tol: float = 1e-10,
    max_iterations: int = 500,
) -> SpectralResult:
    """Smallest eigenvalue of  w -> -(1-theta) Lw + V w  in the weighted measure.

    theta = 0 is accepted so that theta = 2/p - 1 covers p = 2.
    """
    if not (0.0 <= theta < 1.0):
        raise ParameterError(f"theta must lie in [0, 1); got {theta}")
    V = hessian_infimum_V(pot, grid)
    return _solve_quotient(grid, 1.0 - theta, V, tol, max_iterations)


def _check_outward_derivative(pot: Potential, grid: Grid) -> None:
    if grid.kind == "radial":
        _, dF, _ = evaluate(pot, grid.nodes[-1])
        if dF < -1e-12:
            raise BoundaryConditionViolated(
                f"outward derivative of F at the truncation radius is {dF:.3e} < 0"
            )
        return
    _, dF_L, _ = evaluate(pot, grid.nodes[0])
    _, dF_R, _ = evaluate(pot, grid.nodes[-1])
    if dF_R < -1e-12 or dF_L > 1e-12:
        raise BoundaryConditionViolated(
            "confinement must grow outward at the truncation boundary "
            f"(F'(xL)={dF_L:.3e}, F'(xR)={dF_R:.3e})"
        )


def lambda1_schrodinger_bound(
    p: float,
    pot: Potential,
    grid: Grid,
    tol: float = 1e-10,
    max_iterations: int = 500,
) -> SpectralResult:
    """Flat-measure ground-state lower bound for lambda1_linear(p).

    Solves  -Delta u + [nu V + |F'|^2/4 - (Lap F)/2] u = E u  in the flat
    measure (with the radial Jacobian on radial grids) and returns
    2(p-1)/p * E_0.  The substitution requires the confinement to grow
    outward at the truncation boundary.
    """
    if not (1.0 < p <= 2.0):
        raise ParameterError(f"p must lie in (1, 2]; got {p}")
    _check_outward_derivative(pot, grid)
    nu = p / (2.0 * (p - 1.0))
    W = schrodinger_potential(pot, grid, nu)
    mass = grid.dx_weights
    # flat-measure conductances: face area / h, i.e. weighted ones divided by face g
    conduct = grid.conductance / _face_g(grid)
    diag, off = _assemble_symmetrized(mass, conduct, 1.0, W)
    E0, y, residual, iterations, tol_eff = smallest_eigenpair(diag, off, tol, max_iterations)
    scalefac = 2.0 * (p - 1.0) / p
    u = y / np.sqrt(mass)
    if u[int(np.argmax(np.abs(u)))] < 0.0:
        u = -u
    return SpectralResult(
        lam=scalefac * E0,
        eigenvector=u,
        residual=scalefac * residual,
        iterations=iterations,
        tol=scalefac * tol_eff,
    )


def _face_g(grid: Grid) -> np.ndarray:
    """Recover the face weights e^{-F} used in the conductances."""
    if grid.potential.family == "tabulated":
        F, _, _ = evaluate(grid.potential, grid.nodes)
        return np.exp(-0.5 * (F[:-1] + F[1:]))
    if grid.kind == "radial":
        faces = (np.arange(1, grid.n)) * grid.h
    else:
        faces = 0.5 * (grid.nodes[:-1] + grid.nodes[1:])
    return np.exp(-log_weight(grid.potential, faces))


def epsilon_star(
    p: float,
    pot: Potential,
    grid: Grid,
    eps_tol: float = 1e-4,
    eig_floor: float = 1e-8,
    tol: float = 1e-10,
) -> float:
    """Largest eps in (0, (1-alpha)/alpha] keeping the modified quotient

        inf_w [ (1 - alpha(1+eps)) |Dw|^2 + V w^2 ] / [ w^2 ]

    nonnegative (>= -eig_floor).  Returns 0 if even eps -> 0+ fails; the
    gradient coefficient must stay nonnegative, which caps eps at (1-alpha)/alpha.
    """
    if not (1.0 < p < 2.0):
        raise ParameterError(f"p must lie strictly in (1, 2); got {p}")
    alpha = (2.0 - p) / p
    cap = (1.0 - alpha) / alpha
    V = hessian_infimum_V(pot, grid)

    def smallest(eps: float) -> float:
        coeff = max(0.0, 1.0 - alpha * (1.0 + eps))
        return _solve_quotient(grid, coeff, V, tol, 500).lam

    if smallest(cap) >= -eig_floor:
        return cap
    if smallest(0.0) < -eig_floor:
        return 0.0
    lo, hi = 0.0, cap  # feasible at lo, infeasible at hi
    while hi - lo > eps_tol:
        mid = 0.5 * (lo + hi)
        if smallest(mid) >= -eig_floor:
            lo = mid
        else:
            hi = mid
    return lo

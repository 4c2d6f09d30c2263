"""Log-barrier online mirror descent update on the probability simplex.

The mirror map is ``psi(p) = -sum_i ln(p_i) / eta_i`` with one learning rate
per coordinate. Its OMD step has the closed form

    1 / q_i = 1 / p_i + eta_i * (loss_i - lam)

where the normalization multiplier ``lam`` is the root of

    F(lam) = sum_i 1 / (1/p_i + eta_i * (loss_i - lam)) = 1,

which lies in ``[min_i loss_i, max_i loss_i]``. F is strictly increasing in
``lam`` wherever all denominators stay positive, so the root is unique and a
bracketed line search finds it.
"""

from __future__ import annotations

import math
from typing import Sequence

from .core import (
    SolverConvergenceError,
    validate_simplex,
)

DEFAULT_TOL = 1e-12
MAX_ITERATIONS = 200


def _check_inputs(p: Sequence[float], losses: Sequence[float], rates: Sequence[float]) -> None:
    if not (len(p) == len(losses) == len(rates)):
        raise ValueError(
            f"mismatched lengths: p={len(p)}, losses={len(losses)}, rates={len(rates)}"
        )
    for v in losses:
        if not math.isfinite(v) or v < 0.0:
            raise ValueError(f"losses must be finite and >= 0, got {v}")
    for r in rates:
        if not math.isfinite(r) or r <= 0.0:
            raise ValueError(f"rates must be finite and > 0, got {r}")


def solve_lambda(
    p: Sequence[float],
    losses: Sequence[float],
    rates: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> float:
    """Solve the normalization constraint F(lam) = 1 by a guarded line search.

    Bisection on ``[min loss, max loss]`` keeps a valid bracket (any lam with
    a nonpositive denominator counts as F = +inf, since the smallest pole can
    sit inside the bracket); a Newton step is taken whenever it stays inside
    the bracket. Returns once ``|F - 1| <= tol`` or once the bracket collapses
    to floating-point resolution, where the best-seen lam is exact to one ulp
    and further iterations cannot improve it.
    """
    p = validate_simplex(p)
    _check_inputs(p, losses, rates)
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    lo = min(losses)
    hi = max(losses)
    if lo == hi:
        # F(c) = sum p_i = 1 exactly for a constant loss vector.
        return float(lo)
    inv_p = [1.0 / x for x in p]
    best_lam = lo
    best_err = math.inf
    lam = 0.5 * (lo + hi)
    for _ in range(max_iter):
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            return best_lam
        poles = False
        total = 0.0
        slope = 0.0
        dens = []
        for ip, r, l in zip(inv_p, rates, losses):
            d = ip + r * (l - lam)
            if d <= 0.0:
                poles = True
                break
            dens.append(d)
            total += 1.0 / d
            slope += r / (d * d)
        if poles:
            hi = lam
            lam = 0.5 * (lo + hi)
            continue
        err = total - 1.0
        if abs(err) <= tol:
            return lam
        if abs(err) < best_err:
            best_err = abs(err)
            best_lam = lam
        if err < 0.0:
            lo = lam
        else:
            hi = lam
        newton = lam - err / slope if slope > 0.0 else lam
        if lo < newton < hi:
            lam = newton
        else:
            lam = 0.5 * (lo + hi)
    raise SolverConvergenceError(
        f"no lambda with |F-1| <= {tol} after {max_iter} iterations (best {best_err})"
    )


def omd_step(
    p: Sequence[float],
    losses: Sequence[float],
    rates: Sequence[float],
    tol: float = DEFAULT_TOL,
) -> list[float]:
    """One log-barrier OMD update; returns the next distribution.

    Equal losses leave the distribution unchanged. The output always passes
    through simplex validation, which renormalizes line-search drift.
    """
    p = validate_simplex(p)
    _check_inputs(p, losses, rates)
    if min(losses) == max(losses):
        return p
    lam = solve_lambda(p, losses, rates, tol=tol)
    q = [1.0 / (1.0 / pi + r * (l - lam)) for pi, r, l in zip(p, rates, losses)]
    return validate_simplex(q)


def bregman_log_barrier(
    rates: Sequence[float], p: Sequence[float], q: Sequence[float]
) -> float:
    """Bregman divergence of the log-barrier map: sum_i h(p_i/q_i) / eta_i.

    Here ``h(y) = y - 1 - ln(y)`` is nonnegative and zero only at y = 1, so
    the divergence is zero iff p == q. Computed via log1p for accuracy near
    the diagonal.
    """
    p = validate_simplex(p)
    q = validate_simplex(q)
    if len(rates) != len(p):
        raise ValueError("rates must match the distribution length")
    total = 0.0
    for r, pi, qi in zip(rates, p, q):
        d = pi / qi - 1.0
        total += (d - math.log1p(d)) / r
    return total

#!/usr/bin/env python3

"""Active-set nonnegative least squares on the normal-equations form.

Solves min_{x >= 0} (x^T G x) / 2 - h^T x for a symmetric positive
semidefinite Gram matrix G (W W^T or V^T V) and linear term h, which is the
per-row subproblem of an ANLS half-step.
"""

import logging
from typing import NamedTuple, Optional, Set, Tuple

import numpy as np
import scipy.linalg

from .errors import CapExceededError, InvalidArgumentError
from .matrix import FloatArray

__all__ = [
    "KKTResiduals",
    "exchange_cap",
    "nnls_active_set",
    "kkt_residuals",
]


class KKTResiduals(NamedTuple):
    """Violations of the optimality conditions (all zero at an exact solution)."""

    primal: float  # how far x dips below zero
    dual: float  # how negative the gradient gets on active coordinates
    stationarity: float  # largest |gradient| on passive coordinates
    complementarity: float  # largest |x_i * gradient_i|

    @property
    def worst(self) -> float:
        return max(self.primal, self.dual, self.stationarity, self.complementarity)


def exchange_cap(r: int) -> int:
    """Maximum number of active-set exchanges allowed for r variables."""
    return 3 * 2**r + 10 * r


def _solve_passive(
    g: FloatArray, h: FloatArray, passive: FloatArray, ridge: float
) -> FloatArray:
    z = np.zeros_like(h)
    idx = np.flatnonzero(passive)
    if idx.size == 0:
        return z
    g_pp = g[np.ix_(idx, idx)]
    h_p = h[idx]
    try:
        z[idx] = scipy.linalg.solve(g_pp, h_p, assume_a="pos", check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        trace = float(np.trace(g))
        shift = ridge * (trace / g.shape[0] if trace > 0 else 1.0)
        logging.debug(
            f"Singular passive-set system of size {idx.size}; ridge shift {shift:.3e}"
        )
        z[idx] = scipy.linalg.solve(
            g_pp + shift * np.eye(idx.size), h_p, assume_a="sym", check_finite=False
        )
    return z


def nnls_active_set(
    g: FloatArray,
    h: FloatArray,
    x0: Optional[FloatArray] = None,
    tol: float = 1e-10,
    ridge: float = 1e-12,
) -> Tuple[FloatArray, int]:
    """Lawson-Hanson primal active-set method for min (x^T G x)/2 - h^T x, x >= 0.

    The working set starts from the support of `x0` (warm start), then the
    solver alternates between solving the unconstrained problem on the passive
    (nonzero) variables and exchanging one variable between the active (zero)
    and passive sets, decreasing the objective at every exchange.

    Args:
        g: r x r symmetric positive semidefinite matrix
        h: Linear term of length r
        x0: Optional nonnegative warm start of length r
        tol: Relative tolerance on the gradient for optimality
        ridge: Relative ridge used when a passive-set system is singular

    Returns:
        (x, exchanges): the optimal x >= 0 and the number of exchanges made

    Raises:
        InvalidArgumentError: If shapes do not match
        CapExceededError: If more than exchange_cap(r) exchanges are needed
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    r = h.shape[0]
    if g.shape != (r, r):
        raise InvalidArgumentError(f"G must be {r}x{r}, got {g.shape}")

    scale = max(
        1.0,
        float(np.max(np.abs(h), initial=0.0)),
        float(np.max(np.abs(g), initial=0.0)),
    )
    grad_tol = tol * scale
    cap = exchange_cap(r)

    if x0 is None:
        x = np.zeros(r)
    else:
        x = np.maximum(np.asarray(x0, dtype=np.float64).reshape(-1), 0.0)
        if x.shape[0] != r:
            raise InvalidArgumentError(f"x0 must have length {r}, got {x.shape[0]}")
    passive = x > 0
    exchanges = 0
    blocked: Set[int] = set()

    def count_exchange() -> None:
        nonlocal exchanges
        exchanges += 1
        if exchanges > cap:
            logging.error(f"NNLS exchange cap {cap} exceeded for r={r}")
            raise CapExceededError(
                f"active-set NNLS did not converge within {cap} exchanges (r={r})"
            )

    while True:
        # Solve on the passive set, stepping back toward feasibility whenever a
        # passive variable would turn nonpositive.
        while True:
            z = _solve_passive(g, h, passive, ridge)
            bad = passive & (z <= 0)
            if not bad.any():
                x = z
                break
            ratios = x[bad] / (x[bad] - z[bad])
            k = int(np.flatnonzero(bad)[int(np.argmin(ratios))])
            x = np.maximum(x + float(ratios.min()) * (z - x), 0.0)
            x[k] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
            count_exchange()

        gradient = g @ x - h
        candidates = ~passive & (-gradient > grad_tol)
        for j in blocked:
            candidates[j] = False
        if not candidates.any():
            return x, exchanges

        j = int(np.argmax(np.where(candidates, -gradient, -np.inf)))
        passive[j] = True
        count_exchange()
        z = _solve_passive(g, h, passive, ridge)
        if z[j] <= 0:
            # Numerically flat direction: the entering variable cannot move.
            passive[j] = False
            blocked.add(j)
            continue
        blocked.clear()


def kkt_residuals(g: FloatArray, h: FloatArray, x: FloatArray) -> KKTResiduals:
    """Measure how far x is from satisfying the KKT conditions.

    Args:
        g: r x r Gram matrix
        h: Linear term of length r
        x: Candidate solution

    Returns:
        The four residuals; all are zero at the exact optimum
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    gradient = g @ x - h
    active = x <= 0
    primal = max(0.0, -float(np.min(x, initial=0.0)))
    dual = max(0.0, -float(np.min(gradient[active], initial=0.0)))
    stationarity = float(np.max(np.abs(gradient[~active]), initial=0.0))
    complementarity = float(np.max(np.abs(x * gradient), initial=0.0))
    return KKTResiduals(primal, dual, stationarity, complementarity)

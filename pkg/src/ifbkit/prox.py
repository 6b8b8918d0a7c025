"""Proximal operators, the forward-backward map and optimality measures.

Everything here is a pure function of its inputs. The nonsmooth parts a
problem can carry are described by three small classes (:class:`L1Norm`,
:class:`BoxIndicator`, :class:`ZeroFunction`); problems built from other
oracles still work with :func:`forward_backward_map` but not with
:func:`min_norm_subgradient`.
"""

from typing import NamedTuple

import numpy as np

from ._exceptions import NumericFailure

__all__ = [
    "BoxIndicator",
    "L1Norm",
    "ProxResult",
    "ZeroFunction",
    "forward_backward_map",
    "min_norm_subgradient",
    "project_box",
    "scaled_residual",
    "soft_threshold",
]


def soft_threshold(x, t):
    """Componentwise ``sign(x) * max(|x| - t, 0)``, the prox of ``t * ||.||_1``.

    Parameters
    ----------
    x : array_like
        Finite input vector (scalars are accepted).
    t : float
        Nonnegative threshold.
    """
    x = np.asarray(x, dtype=float)
    t = float(t)
    if not (t >= 0.0 and np.isfinite(t)):
        raise ValueError(f"threshold must be finite and nonnegative, got {t}")
    if not np.all(np.isfinite(x)):
        raise ValueError("soft_threshold input must be finite")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def project_box(x, lo, hi):
    """Euclidean projection onto ``{z : lo <= z <= hi}``.

    ``lo`` and ``hi`` broadcast against ``x``; ``lo > hi`` anywhere is an
    error.
    """
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box bounds must satisfy lo <= hi componentwise")
    return np.minimum(hi, np.maximum(lo, x))


class L1Norm:
    """``g(x) = weight * ||x||_1``."""

    def __init__(self, weight):
        weight = float(weight)
        if not weight > 0:
            raise ValueError(f"l1 weight must be positive, got {weight}")
        self.weight = weight

    def value(self, x):
        return self.weight * float(np.abs(x).sum())

    def prox(self, v, t):
        return soft_threshold(v, t * self.weight)

    def __repr__(self):
        return f"L1Norm({self.weight!r})"


class BoxIndicator:
    """Indicator of the box ``[lo, hi]``; ``value`` is 0 inside, ``inf`` outside."""

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi componentwise")
        self.lo = lo
        self.hi = hi

    def value(self, x, slack=0.0):
        x = np.asarray(x)
        if np.all(x >= self.lo - slack) and np.all(x <= self.hi + slack):
            return 0.0
        return np.inf

    def prox(self, v, t):
        return project_box(v, self.lo, self.hi)

    def __repr__(self):
        return f"BoxIndicator(lo={self.lo!r}, hi={self.hi!r})"


class ZeroFunction:
    """``g = 0``; its prox is the identity."""

    def value(self, x):
        return 0.0

    def prox(self, v, t):
        return np.array(v, dtype=float, copy=True)

    def __repr__(self):
        return "ZeroFunction()"


class ProxResult(NamedTuple):
    """Image of a point under ``T_lambda`` and the residual norm ``||x - T(x)||``."""

    point: np.ndarray
    residual_norm: float


def forward_backward_map(problem, x, lam):
    """Apply ``T_lam(x) = prox_{lam g}(x - lam * grad f(x))``.

    Parameters
    ----------
    problem : ProblemInstance
        Supplies ``smooth_gradient`` and ``prox``.
    x : ndarray
        Point to map.
    lam : float
        Positive step length.

    Returns
    -------
    ProxResult
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"step length must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    grad = problem.smooth_gradient(x)
    if not np.all(np.isfinite(grad)):
        raise NumericFailure("non-finite gradient in forward-backward step")
    point = problem.prox(x - lam * grad, lam)
    return ProxResult(point, float(np.linalg.norm(x - point)))


def scaled_residual(problem, x, lam):
    """``||x - T_lam(x)|| / lam``, the fallback termination measure."""
    return forward_backward_map(problem, x, lam).residual_norm / lam


def min_norm_subgradient(problem, x, grad=None):
    """Minimum-norm element of ``grad f(x) + dg(x)`` for separable ``g``.

    Supported nonsmooth parts are :class:`L1Norm`, :class:`BoxIndicator`
    and :class:`ZeroFunction`. For the box, ``x`` must lie in the box and a
    coordinate counts as active only when it equals a bound exactly, which
    is what projection produces.

    Parameters
    ----------
    problem : ProblemInstance
    x : ndarray
    grad : ndarray, optional
        Precomputed ``grad f(x)``.

    Returns
    -------
    (ndarray, float)
        The subgradient and its Euclidean norm.
    """
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad = problem.smooth_gradient(x)
    g = getattr(problem, "nonsmooth", None)
    if isinstance(g, L1Norm):
        delta = g.weight
        shrunk = np.sign(grad) * np.maximum(np.abs(grad) - delta, 0.0)
        v = np.where(x != 0.0, grad + delta * np.sign(x), shrunk)
    elif isinstance(g, BoxIndicator):
        lo = np.broadcast_to(g.lo, x.shape)
        hi = np.broadcast_to(g.hi, x.shape)
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError("point lies outside the box; subdifferential is empty")
        at_lo = x == lo
        at_hi = x == hi
        # normal cone at lo is (-inf, 0], at hi [0, inf), all of R when lo == hi
        zero_ok = (at_lo & at_hi) | (at_lo & (grad >= 0)) | (at_hi & (grad <= 0))
        v = np.where(zero_ok, 0.0, grad)
    elif isinstance(g, ZeroFunction):
        v = np.array(grad, dtype=float, copy=True)
    else:
        raise NotImplementedError(
            f"min-norm subgradient is not available for nonsmooth part {g!r}"
        )
    return v, float(np.linalg.norm(v))

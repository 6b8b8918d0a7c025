"""Concrete composite problems ``min f(x) + g(x)`` and instance generators."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import rng as _rng
from ._exceptions import NumericFailure
from .prox import BoxIndicator, L1Norm, ZeroFunction

__all__ = [
    "ProblemInstance",
    "as_design_matrix",
    "check_convexity",
    "check_lipschitz",
    "estimate_lipschitz",
    "gen_lasso_instance",
    "gen_logistic_instance",
    "gen_qp_instance",
    "make_box_qp",
    "make_lasso",
    "make_logistic",
    "make_quadratic",
]


@dataclass(frozen=True)
class ProblemInstance:
    """Oracles for ``F = f + g``.

    ``prox(v, t)`` returns ``prox_{t g}(v)``. ``nonsmooth`` holds the
    structured description of ``g`` when one exists (needed for min-norm
    subgradients); ``data`` keeps the arrays the instance was built from so
    it can be written to disk.
    """

    smooth_value: Callable[[np.ndarray], float]
    smooth_gradient: Callable[[np.ndarray], np.ndarray]
    nonsmooth_value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    lipschitz: float
    dimension: int
    strong_convexity: Optional[float] = None
    nonsmooth: object = None
    kind: str = "custom"
    data: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (self.lipschitz > 0 and np.isfinite(self.lipschitz)):
            raise ValueError(f"Lipschitz constant must be positive, got {self.lipschitz}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.strong_convexity is not None and self.strong_convexity < 0:
            raise ValueError("strong convexity modulus must be nonnegative")

    @classmethod
    def from_parts(cls, value, gradient, lipschitz, dimension, nonsmooth=None, **kw):
        """Build an instance from a smooth oracle pair and a structured ``g``."""
        if nonsmooth is None:
            nonsmooth = ZeroFunction()
        return cls(
            smooth_value=value,
            smooth_gradient=gradient,
            nonsmooth_value=nonsmooth.value,
            prox=nonsmooth.prox,
            lipschitz=float(lipschitz),
            dimension=int(dimension),
            nonsmooth=nonsmooth,
            **kw,
        )

    def objective(self, x):
        """``F(x) = f(x) + g(x)``."""
        return self.smooth_value(x) + self.nonsmooth_value(x)


def as_design_matrix(M):
    """Validate a design matrix and return it as a dense array or canonical CSR.

    Sparse input is converted to CSR with duplicates summed and column
    indices sorted within each row.
    """
    if sp.issparse(M):
        M = sp.csr_matrix(M, dtype=float, copy=True)
        M.sum_duplicates()
        M.sort_indices()
        if not np.all(np.isfinite(M.data)):
            raise ValueError("design matrix has non-finite entries")
        return M
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"design matrix must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("design matrix has non-finite entries")
    return M


def estimate_lipschitz(M, mode="gram", tol=1e-9, max_iter=5000):
    """Largest eigenvalue of ``M^T M`` (``mode="gram"``) or of PSD ``M``.

    Power iteration from the normalized all-ones vector. Iteration stops
    once the eigen-residual ``||B v - theta v||`` falls below
    ``tol * theta``, where ``B`` is the operator and ``theta`` the Rayleigh
    quotient; ``theta`` never exceeds the true maximum.

    Raises
    ------
    NumericFailure
        If ``max_iter`` iterations pass without meeting the tolerance; the
        exception's ``estimate`` is the last Rayleigh quotient.
    """
    if mode not in ("gram", "symmetric"):
        raise ValueError(f"unknown mode {mode!r}")
    M = as_design_matrix(M)
    if mode == "symmetric" and M.shape[0] != M.shape[1]:
        raise ValueError("symmetric mode needs a square matrix")

    def apply(v):
        if mode == "gram":
            return M.T @ (M @ v)
        return M @ v

    n = M.shape[1]
    v = np.full(n, 1.0 / np.sqrt(n))
    theta = 0.0
    for _ in range(max_iter):
        w = apply(v)
        theta = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            raise ValueError("matrix annihilates the start vector; is it zero?")
        if np.linalg.norm(w - theta * v) <= tol * abs(theta):
            return theta
        v = w / norm_w
    raise NumericFailure(
        f"power iteration did not converge in {max_iter} iterations", estimate=theta
    )


def make_lasso(A, b, delta):
    """``f(x) = 0.5 ||Ax - b||^2``, ``g(x) = delta ||x||_1``."""
    A = as_design_matrix(A)
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"A has {A.shape[0]} rows but b has shape {b.shape}")
    if not delta > 0:
        raise ValueError("delta must be positive")

    def value(x):
        r = A @ x - b
        return 0.5 * float(r @ r)

    def gradient(x):
        return A.T @ (A @ x - b)

    return ProblemInstance.from_parts(
        value,
        gradient,
        estimate_lipschitz(A, "gram"),
        A.shape[1],
        nonsmooth=L1Norm(delta),
        kind="lasso",
        data={"A": A, "b": b, "delta": float(delta)},
    )


def _log1pexp(z):
    # log(1 + e^z) without overflow
    out = np.empty_like(z)
    pos = z > 0
    out[pos] = z[pos] + np.log1p(np.exp(-z[pos]))
    out[~pos] = np.log1p(np.exp(z[~pos]))
    return out


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def make_logistic(features, labels, delta, lipschitz_rule="conservative"):
    """Average logistic loss plus ``delta ||x||_1``.

    ``f(x) = (1/N) sum_i log(1 + exp(-l_i <h_i, x>))`` over ``N`` samples.
    With ``K = -diag(l) H`` the Lipschitz constant is ``(4/N) ||K^T K||``
    under ``lipschitz_rule="conservative"`` and the tight ``||K^T K|| / (4N)``
    under ``"standard"``.
    """
    H = as_design_matrix(features)
    labels = np.asarray(labels, dtype=float)
    if labels.ndim != 1 or labels.shape[0] != H.shape[0]:
        raise ValueError(f"{H.shape[0]} samples but labels have shape {labels.shape}")
    if not np.all((labels == 1.0) | (labels == -1.0)):
        raise ValueError("labels must be -1 or +1")
    if not delta > 0:
        raise ValueError("delta must be positive")
    n_samples = H.shape[0]
    if sp.issparse(H):
        K = sp.diags(-labels) @ H
        K = sp.csr_matrix(K)
    else:
        K = -labels[:, None] * H
    norm = estimate_lipschitz(K, "gram")
    if lipschitz_rule == "conservative":
        lip = 4.0 * norm / n_samples
    elif lipschitz_rule == "standard":
        lip = norm / (4.0 * n_samples)
    else:
        raise ValueError(f"unknown lipschitz_rule {lipschitz_rule!r}")

    def value(x):
        return float(_log1pexp(K @ x).sum()) / n_samples

    def gradient(x):
        return K.T @ _sigmoid(K @ x) / n_samples

    return ProblemInstance.from_parts(
        value,
        gradient,
        lip,
        H.shape[1],
        nonsmooth=L1Norm(delta),
        kind="logistic",
        data={
            "features": H,
            "labels": labels,
            "delta": float(delta),
            "lipschitz_rule": lipschitz_rule,
        },
    )


def make_box_qp(A, b, lo, hi):
    """``f(x) = 0.5 x^T A x + b^T x`` over the box ``[lo, hi]``.

    ``A`` must be symmetric positive definite; ``strong_convexity`` is its
    smallest eigenvalue and ``lipschitz`` the largest.
    """
    A = np.asarray(as_design_matrix(A.toarray() if sp.issparse(A) else A))
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > 1e-10 * scale:
        raise ValueError("A must be symmetric")
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
    box = BoxIndicator(lo, hi)
    mu_f = float(scipy.linalg.eigvalsh(A, subset_by_index=[0, 0])[0])
    if mu_f <= 0:
        raise ValueError("A must be positive definite")

    def value(x):
        return 0.5 * float(x @ (A @ x)) + float(b @ x)

    def gradient(x):
        return A @ x + b

    return ProblemInstance.from_parts(
        value,
        gradient,
        estimate_lipschitz(A, "symmetric"),
        n,
        nonsmooth=box,
        strong_convexity=mu_f,
        kind="qp",
        data={"A": A, "b": b, "lo": lo, "hi": hi},
    )


def make_quadratic(curvature, center, nonsmooth=None):
    """Separable ``f(x) = 0.5 sum_i c_i (x_i - z_i)^2``; handy for small checks."""
    c = np.atleast_1d(np.asarray(curvature, dtype=float))
    z = np.atleast_1d(np.asarray(center, dtype=float))
    c, z = np.broadcast_arrays(c, z)
    c = c.copy()
    z = z.copy()
    if np.any(c < 0):
        raise ValueError("curvature must be nonnegative")

    def value(x):
        d = x - z
        return 0.5 * float(c @ (d * d))

    def gradient(x):
        return c * (x - z)

    lip = float(c.max())
    return ProblemInstance.from_parts(
        value,
        gradient,
        lip if lip > 0 else 1.0,
        c.size,
        nonsmooth=nonsmooth,
        strong_convexity=float(c.min()),
        kind="quadratic",
        data={"curvature": c, "center": z},
    )


def gen_lasso_instance(m, n, s, seed, delta=1.0, noise=0.5):
    """Gaussian LASSO instance with a planted ``s``-sparse vector.

    Draw order from ``PCG64(seed)``: ``A`` (``m x n``, C order), the
    support, the planted values, the noise. ``b = A x_hat + noise * eps``.

    Returns
    -------
    (ProblemInstance, ndarray)
        The instance and the planted vector ``x_hat``.
    """
    if not (m > 0 and n > 0):
        raise ValueError("m and n must be positive")
    if not 0 < s <= n:
        raise ValueError(f"need 0 < s <= n, got s={s}, n={n}")
    gen = _rng.make_rng(seed)
    A = _rng.normal(gen, (m, n))
    support = _rng.choose(gen, n, s)
    planted = np.zeros(n)
    planted[support] = _rng.normal(gen, s)
    eps = _rng.normal(gen, m)
    b = A @ planted + noise * eps
    problem = make_lasso(A, b, delta)
    problem.data.update(planted=planted, seed=int(seed))
    return problem, planted


def gen_qp_instance(m, seed):
    """Box QP with ``A = B^T B + s I`` on ``[-1, 1]^m``.

    ``B`` is ``(m/2) x m`` standard Gaussian, ``s`` uniform on (0, 1],
    ``b`` standard Gaussian; drawn in that order.
    """
    if m <= 0 or m % 2:
        raise ValueError(f"m must be a positive even integer, got {m}")
    gen = _rng.make_rng(seed)
    B = _rng.normal(gen, (m // 2, m))
    shift = 1.0 - float(_rng.uniform(gen))
    b = _rng.normal(gen, m)
    A = B.T @ B + shift * np.eye(m)
    A = 0.5 * (A + A.T)
    problem = make_box_qp(A, b, -np.ones(m), np.ones(m))
    problem.data.update(shift=shift, seed=int(seed))
    return problem


def gen_logistic_instance(n_samples, dim, seed, delta=1e-2, density=1.0,
                          lipschitz_rule="conservative"):
    """Synthetic sparse-logistic instance, a stand-in for LIBSVM data.

    Features are Gaussian, kept with probability ``density``; labels are
    the signs of a planted linear score flipped with probability 0.1.
    """
    gen = _rng.make_rng(seed)
    H = _rng.normal(gen, (n_samples, dim))
    if density < 1.0:
        H = H * (_rng.uniform(gen, (n_samples, dim)) < density)
    w = _rng.normal(gen, dim)
    flip = _rng.uniform(gen, n_samples) < 0.1
    labels = np.where((H @ w >= 0) ^ flip, 1.0, -1.0)
    problem = make_logistic(H, labels, delta, lipschitz_rule=lipschitz_rule)
    problem.data.update(seed=int(seed))
    return problem


def check_lipschitz(problem, samples=50, seed=0, scale=1.0):
    """Largest observed ``||grad f(u) - grad f(v)|| / (L ||u - v||)`` over random pairs."""
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = scale * gen.standard_normal(problem.dimension)
        v = scale * gen.standard_normal(problem.dimension)
        d = np.linalg.norm(u - v)
        if d == 0:
            continue
        diff = np.linalg.norm(problem.smooth_gradient(u) - problem.smooth_gradient(v))
        worst = max(worst, diff / (problem.lipschitz * d))
    return worst


def check_convexity(problem, samples=50, seed=0, scale=1.0):
    """Largest violation of the midpoint-type convexity inequality for f and g."""
    gen = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(samples):
        u = scale * gen.standard_normal(problem.dimension)
        v = scale * gen.standard_normal(problem.dimension)
        if isinstance(problem.nonsmooth, BoxIndicator):
            u = np.clip(u, problem.nonsmooth.lo, problem.nonsmooth.hi)
            v = np.clip(v, problem.nonsmooth.lo, problem.nonsmooth.hi)
        theta = gen.uniform()
        w = theta * u + (1 - theta) * v
        for fn in (problem.smooth_value, problem.nonsmooth_value):
            gap = fn(w) - (theta * fn(u) + (1 - theta) * fn(v))
            worst = max(worst, gap)
    return worst

"""Momentum schedules ``t_k`` and extrapolation weights ``gamma_k``.

Every ``t``-based schedule starts at ``t_1 = 1`` and produces
``gamma_k = (t_k - 1) / t_{k+1}``. Internally each kind exposes two stable
primitives, ``log_t(k)`` and ``log_ratio(k) = log(t_{k+1} / t_k)``, so
diagnostics never need ``t_k`` itself (it overflows quickly for the
exponential kind). All primitives accept integer scalars or arrays.

Schedules have a compact text form used in configs and on the command
line::

    exp:ALPHA  pow:R:A  logpoly:THETA  fista  fista_cd:A  const:BETA  none
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "A2Estimate",
    "ComparisonSeq",
    "ConstantBeta",
    "Exp",
    "FistaCD",
    "FistaClassic",
    "LogPoly",
    "NoInertia",
    "Power",
    "Schedule",
    "beta_star",
    "check_assumption_a2",
    "check_nesterov_rule",
    "comparison_alpha",
    "comparison_for",
    "default_comparisons",
    "default_schedules",
    "dominance_onset",
    "gamma",
    "growth_ratio",
    "parse_schedule",
    "t_value",
]

_LOG_MAX = math.log(np.finfo(float).max)


def _ks(k):
    k = np.asarray(k)
    if np.any(k < 1):
        raise ValueError("iteration index must be >= 1")
    return k.astype(float)


def _fmt(x):
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _out(k, values):
    return float(values) if np.ndim(k) == 0 else values


class Schedule:
    """Base class. Subclasses with ``t_based = True`` implement the primitives."""

    t_based = True

    def log_t(self, k):
        raise NotImplementedError

    def log_ratio(self, k):
        raise NotImplementedError

    def t(self, k):
        """``t_k``; raises ``OverflowError`` when it is not representable."""
        lt = np.asarray(self.log_t(k))
        if np.any(lt > _LOG_MAX):
            raise OverflowError(
                f"t_k overflows double precision for {self}; use gamma() instead"
            )
        return _out(k, np.exp(lt))

    def gamma(self, k):
        """``gamma_k = (t_k - 1) / t_{k+1}`` in the log domain."""
        kf = _ks(k)
        g = np.exp(-self.log_ratio(kf)) - np.exp(-self.log_t(kf + 1))
        return _out(k, g)

    def __str__(self):
        return self.spec

    def __repr__(self):
        return f"<Schedule {self.spec}>"


@dataclass(frozen=True, repr=False)
class Exp(Schedule):
    """``t_k = exp((k - 1)^alpha)`` with ``0 < alpha < 1``."""

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def spec(self):
        return f"exp:{_fmt(self.alpha)}"

    def log_t(self, k):
        return _out(k, (_ks(k) - 1.0) ** self.alpha)

    def log_ratio(self, k):
        kf = _ks(k)
        # k^a - (k-1)^a = -k^a * expm1(a * log1p(-1/k)); equals 1 at k = 1
        with np.errstate(divide="ignore"):
            d = -(kf ** self.alpha) * np.expm1(self.alpha * np.log1p(-1.0 / kf))
        return _out(k, np.where(kf == 1.0, 1.0, d))

    def gamma(self, k):
        kf = _ks(k)
        g = np.exp(-self.log_ratio(kf)) - np.exp(-(kf ** self.alpha))
        return _out(k, g)


@dataclass(frozen=True, repr=False)
class Power(Schedule):
    """``t_k = (k^r - 1 + a) / a``; ``r > 1`` and ``r < 1`` are the two regimes."""

    r: float
    a: float

    def __post_init__(self):
        if not (self.r > 0 and self.a > 0):
            raise ValueError(f"need r > 0 and a > 0, got r={self.r}, a={self.a}")

    @property
    def spec(self):
        return f"pow:{_fmt(self.r)}:{_fmt(self.a)}"

    def log_t(self, k):
        kf = _ks(k)
        return _out(k, np.log(kf ** self.r - 1.0 + self.a) - math.log(self.a))

    def log_ratio(self, k):
        kf = _ks(k)
        rise = kf ** self.r * np.expm1(self.r * np.log1p(1.0 / kf))
        return _out(k, np.log1p(rise / (kf ** self.r - 1.0 + self.a)))

    def gamma(self, k):
        kf = _ks(k)
        g = (kf ** self.r - 1.0) / ((kf + 1.0) ** self.r - 1.0 + self.a)
        return _out(k, g)


@dataclass(frozen=True, repr=False)
class LogPoly(Schedule):
    """``t_1 = 1`` and ``t_k = k / ln(k)^theta`` for ``k >= 2``.

    Only ``theta`` for which every ``gamma_k`` lies in ``[0, 1)`` is
    accepted; the check scans the initial stretch where ``t_k`` is not yet
    increasing (``ln k <= theta``).
    """

    theta: float

    def __post_init__(self):
        if not 0 < self.theta <= 50:
            raise ValueError(f"theta must lie in (0, 50], got {self.theta}")
        ks = np.arange(1, int(math.exp(self.theta)) + 3)
        g = self.gamma(ks)
        if np.any(g < 0) or np.any(g >= 1):
            raise ValueError(f"theta={self.theta} yields gamma_k outside [0, 1)")

    @property
    def spec(self):
        return f"logpoly:{_fmt(self.theta)}"

    def log_t(self, k):
        kf = _ks(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(kf) - self.theta * np.log(np.log(kf))
        return _out(k, np.where(kf == 1.0, 0.0, lt))

    def log_ratio(self, k):
        kf = _ks(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.log1p(1.0 / kf)
            d = step - self.theta * np.log1p(step / np.log(kf))
        first = math.log(2.0) - self.theta * math.log(math.log(2.0))
        return _out(k, np.where(kf == 1.0, first, d))


class _FistaTable:
    """Shared, append-only table of the FISTA recursion.

    ``t[k]`` and ``d[k] = t[k+1] - t[k]`` (index 0 unused). The difference
    is evaluated as ``(1 + 1 / (sqrt(1 + 4 t^2) + 2 t)) / 2`` to avoid
    cancellation.
    """

    def __init__(self):
        self._lock = threading.Lock()
        # (t, d) replaced as one tuple so readers never see a mixed pair
        self.arrays = (np.array([np.nan, 1.0]), np.array([np.nan]))

    def ensure(self, n):
        """Return ``(t, d)`` holding at least ``t[1..n+1]`` and ``d[1..n]``."""
        arrays = self.arrays
        if len(arrays[1]) > n:
            return arrays
        with self._lock:
            t_old, d_old = self.arrays
            if len(d_old) > n:
                return self.arrays
            size = max(n + 2, 2 * len(t_old))
            t = np.empty(size)
            d = np.empty(size - 1)
            m = len(t_old)
            t[:m] = t_old
            d[: m - 1] = d_old
            tk = t[m - 1]
            for j in range(m - 1, size - 1):
                root = math.sqrt(1.0 + 4.0 * tk * tk)
                d[j] = 0.5 * (1.0 + 1.0 / (root + 2.0 * tk))
                tk = 0.5 * (1.0 + root)
                t[j + 1] = tk
            self.arrays = (t, d)
            return self.arrays


_FISTA = _FistaTable()


@dataclass(frozen=True, repr=False)
class FistaClassic(Schedule):
    """``t_1 = 1``, ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2``.

    Values come from a shared memo table, so instances are stateless and
    may be shared between runs.
    """

    @property
    def spec(self):
        return "fista"

    def _lookup(self, k):
        k = np.asarray(k)
        if np.any(k < 1):
            raise ValueError("iteration index must be >= 1")
        t, d = _FISTA.ensure(int(np.max(k)) + 1)
        return k.astype(np.int64), t, d

    def t(self, k):
        i, t, _ = self._lookup(k)
        return _out(k, t[i])

    def log_t(self, k):
        i, t, _ = self._lookup(k)
        return _out(k, np.log(t[i]))

    def log_ratio(self, k):
        i, t, d = self._lookup(k)
        return _out(k, np.log1p(d[i] / t[i]))

    def gamma(self, k):
        i, t, _ = self._lookup(k)
        return _out(k, (t[i] - 1.0) / t[i + 1])


@dataclass(frozen=True, repr=False)
class FistaCD(Schedule):
    """``t_k = (k - 1 + a) / a``; ``gamma_k = (k - 1) / (k + a)``."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")

    @property
    def spec(self):
        return f"fista_cd:{_fmt(self.a)}"

    def log_t(self, k):
        kf = _ks(k)
        return _out(k, np.log((kf - 1.0 + self.a) / self.a))

    def log_ratio(self, k):
        kf = _ks(k)
        return _out(k, np.log1p(1.0 / (kf - 1.0 + self.a)))

    def gamma(self, k):
        kf = _ks(k)
        return _out(k, (kf - 1.0) / (kf + self.a))


@dataclass(frozen=True, repr=False)
class ConstantBeta(Schedule):
    """Constant ``gamma_k = beta`` (heavy-ball style); not ``t``-based."""

    beta: float
    label: str = field(default="", compare=False)

    t_based = False

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")

    @property
    def spec(self):
        return f"const:{_fmt(self.beta)}"

    def gamma(self, k):
        _ks(k)
        return _out(k, np.full(np.shape(k), self.beta))

    def log_t(self, k):
        raise TypeError("constant-beta schedules have no t sequence")

    log_ratio = log_t


@dataclass(frozen=True, repr=False)
class NoInertia(Schedule):
    """``gamma_k = 0``: the plain forward-backward method."""

    t_based = False

    @property
    def spec(self):
        return "none"

    def gamma(self, k):
        _ks(k)
        return _out(k, np.zeros(np.shape(k)))

    def log_t(self, k):
        raise TypeError("the no-inertia schedule has no t sequence")

    log_ratio = log_t


def beta_star(problem):
    """Heavy-ball constant ``(sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu))``.

    Requires ``problem.strong_convexity``. The returned schedule is labelled
    ``"beta_star"``.
    """
    mu_f = problem.strong_convexity
    if not mu_f:
        raise ValueError("beta_star needs a positive strong convexity modulus")
    rl, rm = math.sqrt(problem.lipschitz), math.sqrt(min(mu_f, problem.lipschitz))
    return ConstantBeta((rl - rm) / (rl + rm), label="beta_star")


def parse_schedule(text):
    """Parse the compact schedule grammar, e.g. ``"pow:8:4"``."""
    head, *args = text.strip().split(":")
    try:
        vals = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"bad schedule parameters in {text!r}") from None
    arity = {"exp": 1, "pow": 2, "logpoly": 1, "fista": 0, "fista_cd": 1,
             "const": 1, "none": 0}
    if head not in arity:
        raise ValueError(f"unknown schedule kind {head!r}")
    if len(vals) != arity[head]:
        raise ValueError(f"{head} takes {arity[head]} parameter(s), got {text!r}")
    return {
        "exp": lambda: Exp(*vals),
        "pow": lambda: Power(*vals),
        "logpoly": lambda: LogPoly(*vals),
        "fista": FistaClassic,
        "fista_cd": lambda: FistaCD(*vals),
        "const": lambda: ConstantBeta(*vals),
        "none": NoInertia,
    }[head]()


def default_schedules():
    """The six cases with the parameters used throughout the benchmarks."""
    return {
        1: Exp(0.5),
        2: Power(8.0, 4.0),
        3: Power(0.5, 0.5),
        4: LogPoly(1.0),
        5: FistaClassic(),
        6: FistaCD(4.0),
    }


def t_value(schedule, k):
    """``t_k`` of a ``t``-based schedule."""
    if not schedule.t_based:
        raise TypeError(f"{schedule} has no t sequence")
    return schedule.t(k)


def gamma(schedule, k):
    """``gamma_k`` for any schedule."""
    return schedule.gamma(k)


def check_nesterov_rule(schedule, k_max, slack=1e-9):
    """First ``k <= k_max`` with ``t_k^2 - t_{k+1}^2 + t_{k+1} < 0``, else ``None``.

    The inequality is tested after division by ``t_{k+1}^2``, i.e. as
    ``(t_k / t_{k+1})^2 - 1 + 1 / t_{k+1} >= -slack``, which stays finite
    for every kind and makes ``slack`` relative.
    """
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    if not schedule.t_based:
        raise TypeError(f"{schedule} has no t sequence")
    for start in range(1, k_max + 1, 1 << 16):
        ks = np.arange(start, min(start + (1 << 16), k_max + 1))
        lhs = np.expm1(-2.0 * schedule.log_ratio(ks)) + np.exp(-schedule.log_t(ks + 1))
        bad = np.flatnonzero(lhs < -slack)
        if bad.size:
            return int(ks[bad[0]])
    return None


def growth_ratio(schedule, k, sigma):
    """``k^sigma (t_{k+1} / t_k - 1)``, the quantity whose limit is assumed to exist."""
    kf = _ks(k)
    return _out(k, kf ** sigma * np.expm1(schedule.log_ratio(kf)))


@dataclass(frozen=True)
class A2Estimate:
    """Estimated limit of :func:`growth_ratio` along a probe ladder."""

    limit: float
    converged: bool
    extrapolated: bool
    ladder: tuple
    values: tuple


def check_assumption_a2(schedule, sigma, k_probe=10**6, rtol=0.01):
    """Estimate ``lim k^sigma (t_{k+1}/t_k - 1)`` on the ladder ``10^3, 10^4, ..., k_probe``.

    When the last two raw ladder values agree within ``rtol`` the last one
    is returned. Otherwise the values are extrapolated linearly in
    ``1 / ln k`` (the slowest correction any supported kind exhibits) from
    consecutive ladder pairs, and the estimate is marked converged when the
    last two extrapolants agree within ``rtol``.
    """
    if not schedule.t_based:
        raise TypeError(f"{schedule} has no t sequence")
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    if k_probe < 1000:
        raise ValueError("k_probe must be at least 1000")
    ladder = []
    k = 1000
    while k < k_probe:
        ladder.append(k)
        k *= 10
    ladder.append(int(k_probe))
    vals = [float(growth_ratio(schedule, k, sigma)) for k in ladder]

    def close(u, v):
        return abs(u - v) <= rtol * max(abs(u), abs(v))

    if len(vals) >= 2 and close(vals[-1], vals[-2]):
        return A2Estimate(vals[-1], True, False, tuple(ladder), tuple(vals))
    h = [1.0 / math.log(k) for k in ladder]
    ext = [
        vals[i + 1] - (vals[i + 1] - vals[i]) * h[i + 1] / (h[i + 1] - h[i])
        for i in range(len(vals) - 1)
    ]
    converged = len(ext) >= 2 and close(ext[-1], ext[-2])
    return A2Estimate(ext[-1] if ext else vals[-1], converged, True,
                      tuple(ladder), tuple(vals))


# comparison sequences --------------------------------------------------------


def _int_log_over_sq(K):
    # integral of ln(x) / x^2 over [1, K]
    return 1.0 - (1.0 + np.log(K)) / K


def _int_log_over_pow(K, a):
    # integral of ln(x) / x^(1+a) over [1, K]
    Ka = K ** a
    return 1.0 / a**2 - np.log(K) / (a * Ka) - 1.0 / (a**2 * Ka)


@dataclass(frozen=True)
class ComparisonSeq:
    """An auxiliary sequence ``s_k`` with ``alpha_k = (s_k - 1) / s_{k+1}``.

    ``schedule`` is the momentum rule the sequence is meant to dominate,
    ``case`` the construction (1-6) and ``p`` the free exponent used by
    cases 3 and 4.
    """

    case: int
    schedule: Schedule
    p: float = 2.0

    def __post_init__(self):
        expected = {1: Exp, 2: Power, 3: Power, 4: LogPoly, 5: FistaClassic, 6: FistaCD}
        if self.case not in expected or not isinstance(self.schedule, expected[self.case]):
            raise ValueError(f"case {self.case} does not match schedule {self.schedule}")
        if self.case == 2 and self.schedule.r <= 1:
            raise ValueError("case 2 needs r > 1")
        if self.case == 3 and self.schedule.r >= 1:
            raise ValueError("case 3 needs r < 1")
        if self.case in (3, 4) and not self.p > 1:
            raise ValueError("p must exceed 1")

    @property
    def name(self):
        extra = f",p={_fmt(self.p)}" if self.case in (3, 4) else ""
        return f"case{self.case}[{self.schedule.spec}{extra}]"

    def log_s(self, k):
        """``ln s_k``; finite for all ``k`` where ``s_k > 0``."""
        kf = _ks(k)
        c = self.case
        if c in (1, 2):
            return _out(k, self.schedule.log_t(kf))
        if c == 3:
            with np.errstate(divide="ignore"):
                v = self.p * np.log(kf - 1.0)
            return _out(k, np.where(kf == 1.0, 0.0, v))
        if c == 4:
            return _out(k, self.p * np.log(kf))
        if c == 5:
            with np.errstate(divide="ignore", invalid="ignore"):
                v = 3.0 * np.log(kf - 1.0) - 2.0 * np.log(_int_log_over_sq(kf - 1.0))
            return _out(k, np.where(kf <= 2.0, 0.0, v))
        a = self.schedule.a
        base = (a + 1.0) * np.log(kf + a - 1.0)
        if a >= 1:
            return _out(k, base)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = base - np.log(_int_log_over_pow(kf - 1.0, a))
        return _out(k, np.where(kf <= 2.0, 0.0, v))

    def s(self, k):
        return _out(k, np.exp(self.log_s(k)))

    def log_ratio(self, k):
        """``ln(s_{k+1} / s_k)``."""
        kf = _ks(k)
        c = self.case
        if c in (1, 2):
            return _out(k, self.schedule.log_ratio(kf))
        if c == 3:
            with np.errstate(divide="ignore"):
                v = self.p * np.log1p(1.0 / (kf - 1.0))
            return _out(k, np.where(kf == 1.0, 0.0, v))
        if c == 4:
            return _out(k, self.p * np.log1p(1.0 / kf))
        if c == 6 and self.schedule.a >= 1:
            return _out(k, (self.schedule.a + 1.0) * np.log1p(1.0 / (kf + self.schedule.a - 1.0)))
        return _out(k, self.log_s(kf + 1) - self.log_s(kf))

    def alpha(self, k):
        """``alpha_k = (s_k - 1) / s_{k+1}``."""
        kf = _ks(k)
        if self.case in (1, 2):
            # s_k = t_k, so alpha_k and gamma_k coincide by definition
            return _out(k, self.schedule.gamma(kf))
        if self.case == 6 and self.schedule.a >= 1:
            a = self.schedule.a
            s_k = (kf + a - 1.0) ** (a + 1.0)
            s_next = (kf + a) ** (a + 1.0)
            return _out(k, (s_k - 1.0) / s_next)
        return _out(k, np.exp(-self.log_ratio(kf)) - np.exp(-self.log_s(kf + 1)))

    def growth(self, k):
        """``(s_{k+1}^2 - s_k^2) / s_k^2``."""
        return _out(k, np.expm1(2.0 * np.asarray(self.log_ratio(k))))


def comparison_for(schedule, p=2.0):
    """The comparison construction matching a schedule of one of the six cases."""
    if isinstance(schedule, Exp):
        return ComparisonSeq(1, schedule)
    if isinstance(schedule, Power):
        return ComparisonSeq(2 if schedule.r > 1 else 3, schedule, p)
    if isinstance(schedule, LogPoly):
        return ComparisonSeq(4, schedule, p)
    if isinstance(schedule, FistaClassic):
        return ComparisonSeq(5, schedule)
    if isinstance(schedule, FistaCD):
        return ComparisonSeq(6, schedule)
    raise ValueError(f"no comparison construction for {schedule}")


def default_comparisons(p=2.0):
    """One comparison sequence per case, built on :func:`default_schedules`."""
    return {c: comparison_for(s, p) for c, s in default_schedules().items()}


def comparison_alpha(comparison, k):
    """``alpha_k`` of a comparison sequence."""
    return comparison.alpha(k)


def dominance_onset(comparison, k_max, slack=1e-14):
    """Smallest ``K`` with ``alpha_k >= gamma_k - slack`` for every ``k`` in ``[K, k_max]``.

    Returns ``k_max + 1`` when the inequality fails at ``k_max`` itself.
    """
    onset = 1
    for start in range(1, k_max + 1, 1 << 16):
        ks = np.arange(start, min(start + (1 << 16), k_max + 1))
        diff = comparison.alpha(ks) - comparison.schedule.gamma(ks)
        bad = np.flatnonzero(diff < -slack)
        if bad.size:
            onset = int(ks[bad[-1]]) + 1
    return onset

"""Run configuration files.

A config is an INI file with a single ``[run]`` section::

    [run]
    problem = lasso
    m = 100
    n = 256
    s = 10
    schedule = pow:8:4
    tol = 1e-6
    seed = 3

Unknown keys are rejected. Command-line flags override file values.
"""

import configparser
import io
from dataclasses import asdict, dataclass, fields, replace

from . import problems
from ._exceptions import ConfigError
from .fileio import load_instance, parse_libsvm
from .schedules import parse_schedule
from .solver import SolverOptions

__all__ = ["RunConfig", "build_problem", "load_config"]

PROBLEM_KINDS = ("lasso", "logistic", "qp", "libsvm", "file")
ALGOS = ("ifb", "adapm", "restart", "fb")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one solver run.

    ``problem`` is a generator kind (``lasso``, ``logistic``, ``qp``), a
    LIBSVM dataset (``libsvm`` with ``dataset``) or a saved instance
    (``file`` with ``dataset``). Sizes are read only by the matching
    generator. ``delta = 0`` selects the usual weight for the kind (1 for
    LASSO, 1e-2 for logistic). ``x0`` is ``zeros`` or a path to a ``.npy``
    vector.
    """

    problem: str = "lasso"
    dataset: str = ""
    m: int = 100
    n: int = 256
    s: int = 10
    n_samples: int = 500
    dim: int = 100
    density: float = 1.0
    delta: float = 0.0
    lipschitz_rule: str = "conservative"
    schedule: str = "fista"
    algo: str = "ifb"
    mu: float = 0.98
    tol: float = 1e-8
    max_iter: int = 10000
    termination: str = "auto"
    modification: str = "none"
    restart: str = "none"
    restart_period: int = 100
    seed: int = 0
    x0: str = "zeros"
    output: str = ""
    format: str = "csv"
    tail_fraction: float = 0.4
    floor_multiplier: float = 10.0

    def __post_init__(self):
        if self.problem not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.problem!r}")
        if self.problem in ("libsvm", "file") and not self.dataset:
            raise ValueError(f"problem={self.problem} needs a dataset path")
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.format not in ("csv", "jsonl"):
            raise ValueError(f"unknown trace format {self.format!r}")
        if self.termination not in ("auto", "subgradient", "residual"):
            raise ValueError(f"unknown termination measure {self.termination!r}")
        parse_schedule(self.schedule)
        self.solver_options()

    def solver_options(self):
        """The :class:`SolverOptions` this config describes."""
        return SolverOptions(
            mu=self.mu, tol=self.tol, max_iter=self.max_iter,
            termination=None if self.termination == "auto" else self.termination,
            modification=self.modification, restart=self.restart,
            restart_period=self.restart_period,
        )

    def with_overrides(self, **values):
        """A copy with the non-``None`` entries of ``values`` applied."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_text(self):
        parser = configparser.ConfigParser(interpolation=None)
        parser["run"] = {k: _to_str(v) for k, v in asdict(self).items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        extra = [s for s in parser.sections() if s != "run"]
        if extra:
            raise ConfigError(f"unknown config sections: {', '.join(extra)}")
        if not parser.has_section("run"):
            return cls()
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in parser["run"].items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _from_str(raw, types[key], key)
        return cls(**values)


def _to_str(v):
    return repr(v) if isinstance(v, float) else str(v)


def _from_str(raw, typ, key):
    try:
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None
    return raw


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_text(fh.read())


def build_problem(cfg, seed=None):
    """Instantiate the problem a config describes; ``seed`` overrides ``cfg.seed``."""
    seed = cfg.seed if seed is None else seed
    delta = cfg.delta if cfg.delta > 0 else (1.0 if cfg.problem == "lasso" else 1e-2)
    if cfg.problem == "lasso":
        return problems.gen_lasso_instance(cfg.m, cfg.n, cfg.s, seed, delta=delta)[0]
    if cfg.problem == "qp":
        return problems.gen_qp_instance(cfg.m, seed)
    if cfg.problem == "logistic":
        return problems.gen_logistic_instance(cfg.n_samples, cfg.dim, seed, delta=delta,
                                              density=cfg.density,
                                              lipschitz_rule=cfg.lipschitz_rule)
    if cfg.problem == "libsvm":
        X, labels = parse_libsvm(cfg.dataset)
        return problems.make_logistic(X, labels, delta, cfg.lipschitz_rule)
    return load_instance(cfg.dataset)

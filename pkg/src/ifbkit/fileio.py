"""Datasets, instances and traces on disk.

LIBSVM text
    ``LABEL idx:val idx:val ...`` per line, indices 1-based and strictly
    increasing. Blank lines and ``#`` comments are skipped.

Trace CSV
    Header ``k,objective,gap,residual,gamma,step_len,modified,wall_nanos``;
    floats written with 17 significant digits so they parse back exactly;
    ``gap`` is left blank when no reference optimum is known; ``modified``
    is 0 or 1. Run metadata (schedule, status, step length, reference
    value) goes to a JSON sidecar next to the trace.

Trace JSON-lines
    One object per record with the same fields.
"""

import json
import logging
import math
import os
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._exceptions import ConfigError, LibSVMParseError
from .problems import make_box_qp, make_lasso, make_logistic
from .solver import IterateRecord, Trace

__all__ = [
    "TRACE_COLUMNS",
    "data_dir",
    "load_instance",
    "parse_libsvm",
    "read_trace",
    "read_trace_meta",
    "save_instance",
    "write_libsvm",
    "write_trace",
]

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("k", "objective", "gap", "residual", "gamma", "step_len",
                 "modified", "wall_nanos")
DATA_DIR_ENV = "IFBKIT_DATA_DIR"


def data_dir():
    """Default dataset directory: ``$IFBKIT_DATA_DIR`` or the working directory."""
    return Path(os.environ.get(DATA_DIR_ENV, "."))


def _resolve(path):
    path = Path(path)
    if not path.is_absolute() and not path.exists():
        candidate = data_dir() / path
        if candidate.exists():
            return candidate
    return path


# -- LIBSVM ------------------------------------------------------------------

def parse_libsvm(path):
    """Read a LIBSVM file into ``(csr_matrix, labels)``.

    Labels greater than zero map to +1 and all others to -1. The matrix has
    as many columns as the largest index seen. Relative paths that do not
    exist are also looked up in :func:`data_dir`.

    Raises
    ------
    LibSVMParseError
        On a malformed label or token, a nonpositive index, or indices that
        do not strictly increase within a line.
    OSError
        When the file cannot be read.
    """
    path = _resolve(path)
    labels, indptr, indices, values = [], [0], [], []
    width = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise LibSVMParseError(f"bad label {tokens[0]!r}", lineno) from None
            if not math.isfinite(label):
                raise LibSVMParseError(f"non-finite label {tokens[0]!r}", lineno)
            last = 0
            for tok in tokens[1:]:
                idx_text, sep, val_text = tok.partition(":")
                if not sep:
                    raise LibSVMParseError(f"token {tok!r} is not idx:val", lineno)
                try:
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise LibSVMParseError(f"malformed token {tok!r}", lineno) from None
                if idx <= 0:
                    raise LibSVMParseError(f"index {idx} is not positive", lineno)
                if idx <= last:
                    raise LibSVMParseError(f"index {idx} does not increase past {last}", lineno)
                if not math.isfinite(val):
                    raise LibSVMParseError(f"non-finite value in {tok!r}", lineno)
                last = idx
                indices.append(idx - 1)
                values.append(val)
            width = max(width, last)
            labels.append(1.0 if label > 0 else -1.0)
            indptr.append(len(indices))
    labels = np.array(labels)
    X = sp.csr_matrix(
        (np.array(values, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(labels), width),
    )
    n_pos = int((labels > 0).sum())
    log.info("%s: %d rows, %d columns; labels mapped to +1 (%d) and -1 (%d)",
             path, X.shape[0], width, n_pos, len(labels) - n_pos)
    return X, labels


def write_libsvm(path, X, labels):
    """Write ``X`` (dense or sparse) and labels in LIBSVM format.

    Explicit zeros are skipped; values use ``repr`` so they parse back
    exactly. Labels are written as ``+1``/``-1`` when they are signs.
    """
    X = sp.csr_matrix(X)
    X.sort_indices()
    labels = np.asarray(labels, dtype=float)
    if labels.shape != (X.shape[0],):
        raise ValueError("one label per row required")
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            lab = labels[i]
            parts = ["+1" if lab == 1.0 else "-1" if lab == -1.0 else repr(float(lab))]
            for j, v in zip(X.indices[lo:hi], X.data[lo:hi]):
                if v != 0.0:
                    parts.append(f"{j + 1}:{float(v)!r}")
            fh.write(" ".join(parts) + "\n")


# -- traces ------------------------------------------------------------------

def _num(x):
    """17-significant-digit text for a float; JSON spellings for non-finite values."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _row(rec, f_star):
    gap = "" if f_star is None else _num(rec.objective - f_star)
    return [str(rec.k), _num(rec.objective), gap, _num(rec.residual), _num(rec.gamma),
            _num(rec.step_len), "1" if rec.modified else "0", str(rec.wall_nanos)]


def _meta_path(path):
    return Path(str(path) + ".meta.json")


def write_trace(trace, path, format="csv", f_star=None, meta=None):
    """Persist a trace; ``f_star`` fills the ``gap`` column.

    A sidecar ``<path>.meta.json`` records the run metadata together with
    anything passed in ``meta``.
    """
    if format not in ("csv", "jsonl", "json-lines"):
        raise ValueError(f"unknown trace format {format!r}")
    path = Path(path)
    if format == "csv":
        lines = [",".join(TRACE_COLUMNS)]
        lines += [",".join(_row(r, f_star)) for r in trace.records]
    else:
        lines = []
        for r in trace.records:
            vals = _row(r, f_star)
            vals[2] = vals[2] or "null"
            lines.append("{" + ", ".join(f'"{c}": {v}' for c, v in zip(TRACE_COLUMNS, vals)) + "}")
    info = {
        "status": trace.status,
        "algorithm": trace.algorithm,
        "schedule": trace.schedule,
        "lam": trace.lam,
        "mu": trace.mu,
        "tol": trace.tol,
        "termination": trace.termination,
        "initial_objective": trace.initial_objective,
        "iterations": trace.iterations,
        "f_star": f_star,
        "format": "csv" if format == "csv" else "jsonl",
    }
    info.update(meta or {})
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _meta_path(path).write_text(json.dumps(info, indent=1, sort_keys=True), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace_meta(path):
    """The sidecar metadata of a stored trace, or ``{}`` if it is missing."""
    meta = _meta_path(path)
    if not meta.exists():
        return {}
    return json.loads(meta.read_text(encoding="utf-8"))


def _record(fields):
    # prox_gap is not persisted
    return IterateRecord(
        k=int(fields["k"]),
        objective=float(fields["objective"]),
        residual=float(fields["residual"]),
        gamma=float(fields["gamma"]),
        step_len=float(fields["step_len"]),
        modified=str(fields["modified"]) in ("1", "True", "true"),
        wall_nanos=int(fields["wall_nanos"]),
        prox_gap=float("nan"),
    )


def read_trace(path):
    """Load a trace written by :func:`write_trace` (format from the extension or content).

    Returns
    -------
    (Trace, ndarray)
        The trace (without ``final_x`` or ``prox_gap`` values) and the gap
        column, NaN where blank.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError(f"{path} is empty")
    records, gaps = [], []
    if lines[0].lstrip().startswith("{"):
        for ln in lines:
            obj = json.loads(ln)
            records.append(_record(obj))
            gaps.append(float("nan") if obj["gap"] is None else float(obj["gap"]))
    else:
        header = lines[0].split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ConfigError(f"{path}: unexpected header {lines[0]!r}")
        for ln in lines[1:]:
            fields = dict(zip(header, ln.split(",")))
            records.append(_record(fields))
            gaps.append(float(fields["gap"]) if fields["gap"] else float("nan"))
    meta = read_trace_meta(path)
    trace = Trace(
        records=records,
        final_x=np.empty(0),
        status=meta.get("status", "unknown"),
        algorithm=meta.get("algorithm", ""),
        schedule=meta.get("schedule", ""),
        lam=float(meta.get("lam", float("nan"))),
        mu=float(meta.get("mu", float("nan"))),
        tol=float(meta.get("tol", float("nan"))),
        termination=meta.get("termination", ""),
        initial_objective=float(meta.get("initial_objective", float("nan"))),
        meta=meta,
    )
    return trace, np.array(gaps)


# -- instances ---------------------------------------------------------------

def _pack_matrix(prefix, M, out):
    if sp.issparse(M):
        M = sp.csr_matrix(M)
        out[prefix + "_data"] = M.data
        out[prefix + "_indices"] = M.indices
        out[prefix + "_indptr"] = M.indptr
        out[prefix + "_shape"] = np.array(M.shape)
    else:
        out[prefix] = np.asarray(M)


def _unpack_matrix(prefix, z):
    if prefix in z:
        return z[prefix]
    return sp.csr_matrix(
        (z[prefix + "_data"], z[prefix + "_indices"], z[prefix + "_indptr"]),
        shape=tuple(z[prefix + "_shape"]),
    )


def save_instance(problem, path):
    """Write a LASSO, logistic or box-QP instance to an ``.npz`` archive."""
    d = problem.data
    out = {"kind": np.array(problem.kind)}
    if problem.kind == "lasso":
        _pack_matrix("A", d["A"], out)
        out.update(b=d["b"], delta=np.array(d["delta"]))
    elif problem.kind == "logistic":
        _pack_matrix("features", d["features"], out)
        out.update(labels=d["labels"], delta=np.array(d["delta"]),
                   lipschitz_rule=np.array(d["lipschitz_rule"]))
    elif problem.kind == "qp":
        out.update(A=d["A"], b=d["b"], lo=d["lo"], hi=d["hi"])
    else:
        raise ValueError(f"cannot persist a problem of kind {problem.kind!r}")
    for key in ("planted", "seed", "shift"):
        if key in d:
            out[key] = np.asarray(d[key])
    try:
        with open(path, "wb") as fh:
            np.savez(fh, **out)
    except OSError as exc:
        raise OSError(f"cannot write instance to {path}: {exc}") from exc


def load_instance(path):
    """Rebuild a problem saved by :func:`save_instance`."""
    path = _resolve(path)
    with np.load(path, allow_pickle=False) as z:
        kind = str(z["kind"])
        if kind == "lasso":
            problem = make_lasso(_unpack_matrix("A", z), z["b"], float(z["delta"]))
        elif kind == "logistic":
            problem = make_logistic(_unpack_matrix("features", z), z["labels"],
                                    float(z["delta"]), str(z["lipschitz_rule"]))
        elif kind == "qp":
            problem = make_box_qp(z["A"], z["b"], z["lo"], z["hi"])
        else:
            raise ValueError(f"{path}: unknown instance kind {kind!r}")
        for key in ("planted", "seed", "shift"):
            if key in z:
                val = z[key]
                problem.data[key] = val if val.ndim else val.item()
    return problem

"""Nonnegative low-rank rightmost eigenpairs of matrix-valued operators."""

import json

import numpy as np

from . import _nnlr
from ._nnlr import ConvergenceError, IoError, best_scaled_error, negcount

__all__ = [
    "ConvergenceError",
    "IoError",
    "apply",
    "bench",
    "best_scaled_error",
    "generate",
    "negcount",
    "solve",
    "vectorize",
]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def generate(spec):
    """Operator spec (dict or JSON text) -> operator dict."""
    return json.loads(_nnlr.generate(_text(spec)))


def solve(op, solver, verbose=False):
    """Run one solver on an operator or operator spec; returns the report dict
    with "x" as a numpy array."""
    report = json.loads(_nnlr.solve(_text(op), _text(solver), verbose))
    report["x"] = np.asarray(report["x"], dtype=float)
    return report


def bench(experiment, timing=True):
    return json.loads(_nnlr.bench(_text(experiment), timing))


def apply(op, x):
    return _nnlr.apply(_text(op), np.asarray(x, dtype=float))


def vectorize(op):
    return _nnlr.vectorize(_text(op))

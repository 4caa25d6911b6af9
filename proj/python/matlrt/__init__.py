"""Likelihood ratio test for row and column dependence in relational data.

Matrices are numpy arrays; a single matrix or a list of replicates is accepted
wherever data is expected. Null samples can be cached on disk with
``cache_dir`` (``MATLRT_CACHE_DIR`` overrides it).
"""

import json

import numpy as np

from . import _matlrt
from ._matlrt import fit_full, fit_null, null_distribution, p_value, quantile, version

__all__ = [
    "fit_full",
    "fit_null",
    "fuzzy_p_values",
    "null_distribution",
    "ols_demean",
    "p_value",
    "power_curve",
    "quantile",
    "run_test",
    "statistic",
    "version",
]

__version__ = version()


def _stack(ys):
    if isinstance(ys, np.ndarray) and ys.ndim == 2:
        return [np.asarray(ys, dtype=float)]
    return [np.asarray(y, dtype=float) for y in ys]


def statistic(ys, missing_diagonal=False, heteroscedastic=False):
    return _matlrt.statistic(_stack(ys), missing_diagonal, heteroscedastic)


def run_test(ys, missing_diagonal=False, heteroscedastic=False, S=10000, seed=1, workers=0, cache_dir=None):
    """Statistic, Monte Carlo p-value and null summary as a dict."""
    return _matlrt.run_test(_stack(ys), missing_diagonal, heteroscedastic, S, seed, workers, cache_dir)


def ols_demean(ys, x, names=(), missing_diagonal=False):
    """OLS residuals of a replicate stack on a dyadic design.

    ``x`` has one row per entry, ordered i fastest, then j, then replicate.
    """
    return _matlrt.ols_demean(_stack(ys), np.asarray(x, dtype=float), list(names), missing_diagonal)


def power_curve(curves, seed=1, S=10000, n_reps=2000, level=0.05, workers=0, full_grid=False):
    """Monte Carlo power for curve descriptions such as
    ``{"kind": "sparse_pair", "m": 5, "rho": [0.2, 0.6]}``."""
    config = {"seed": seed, "S": S, "n_reps": n_reps, "level": level, "workers": workers, "curves": list(curves)}
    return _matlrt.power_from_config(json.dumps(config), full_grid)


def fuzzy_p_values(a, rank=0, missing_diagonal=False, n_iter=10000, burn_in=5000, thin=25, fix_gamma=False,
                   S=10000, seed=1, workers=0, cache_dir=None):
    """Eigenmodel fit of a binary network and the p-values of its posterior residuals."""
    out = _matlrt.fuzzy_p_values(np.asarray(a, dtype=float), rank, missing_diagonal, n_iter, burn_in, thin,
                                 fix_gamma, S, seed, workers, cache_dir)
    return {k: np.asarray(v) for k, v in out.items()}

"""Array-in/array-out bindings for the spectral augmentation operators.

Drop-in surface for ML pipelines: ``sfa``, ``augment``, and ``profile``
consume plain 2-D arrays / parameter mappings plus a seed and return
results that are bit-for-bit identical to what the command-line tool
writes for the same inputs and seed (the parity suite pins this).

Buffer semantics, per call: inputs that are already contiguous row-major
float64 are read in place and never mutated; anything else (including
32-bit floats) is up-converted with a copy.  Returned arrays are always
freshly allocated and owned by the caller.

Errors use the host's standard taxonomy: precondition violations raise
``ValueError`` (``spectralaug.ValidationError``) and iteration/tolerance
failures raise ``RuntimeError`` (``spectralaug.NumericalError``), exactly
one per core error case.  Long computations run inside numpy, which
releases the interpreter lock during the heavy kernels, so other host
threads keep running.

Versioned in lockstep with the core package.
"""

from __future__ import annotations

import numpy as np

import spectralaug
from spectralaug import RngStream, ValidationError, apply_operator, sfa_forward, spec_from_mapping
from spectralaug.analysis import push_forward_profile

__version__ = spectralaug.__version__

__all__ = ["sfa", "augment", "profile", "__version__"]

_PROFILE_KEYS = {"seed", "tail", "grid", "k_values", "trials", "mode"}


def _as_bound_array(h, name: str = "input") -> np.ndarray:
    arr = np.asarray(h)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D array, got ndim={arr.ndim}")
    if arr.dtype != np.float64 or not arr.flags["C_CONTIGUOUS"]:
        arr = np.ascontiguousarray(arr, dtype=np.float64)  # documented copy
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return arr


def sfa(h, k: int, seed: int) -> np.ndarray:
    """Incomplete power iteration; equals the CLI output for the same seed."""
    arr = _as_bound_array(h)
    out = sfa_forward(arr, k, RngStream(int(seed)))
    result = np.array(out.augmented, copy=True)
    return result


def augment(h, spec, seed: int) -> np.ndarray:
    """Apply any operator described by a parameter mapping (CLI schema)."""
    arr = _as_bound_array(h)
    parsed = spec_from_mapping(spec)
    result = apply_operator(arr, parsed, RngStream(int(seed)))
    return np.array(result, copy=True)


def profile(params) -> list[dict]:
    """Push-forward profile rows, mirroring the CLI's profile CSVs.

    ``params`` maps the CLI profile schema: ``tail`` (list of values),
    ``grid`` (list of leading values), optional ``k_values`` (default
    ``[1]``), ``trials`` (default 100000), ``mode`` (default
    ``"synthetic"``), ``seed`` (default 0).  Returns one row dict per
    (k, grid point) with the CSV column names.
    """
    if not isinstance(params, dict):
        raise ValidationError("profile params must be a mapping")
    unknown = set(params) - _PROFILE_KEYS
    if unknown:
        raise ValidationError(f"unknown profile keys: {sorted(unknown)}")
    seed = int(params.get("seed") or 0)
    tail = params.get("tail")
    grid = params.get("grid")
    if tail is None or grid is None:
        raise ValidationError("profile params require 'tail' and 'grid'")
    k_values = [int(k) for k in (params.get("k_values") or [1])]
    trials = int(params.get("trials") or 100_000)
    mode = params.get("mode") or "synthetic"
    rows = []
    for k in k_values:
        prof = push_forward_profile(tail, grid, k, trials, RngStream(seed, k), mode=mode)
        for i, sigma in enumerate(prof.sigma_grid):
            rows.append({
                "sigma": float(sigma),
                "k": k,
                "emp_mean": float(prof.mean[i]),
                "emp_std": float(prof.std[i]),
                "analytic_mean": float(prof.analytic_mean[i]),
                "analytic_std": float(prof.analytic_std[i]),
                "trials": trials,
            })
    return rows

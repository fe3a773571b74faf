"""Spectrum-rebalancing augmentation operators.

Random draw discipline (one documented consumption order per operator, so
any host can reproduce outputs bit-for-bit from a seed):

* ``sfa_forward``     -- d draws for the start vector r0; on a degenerate
                         draw (norm underflow after iterating) the next
                         derived sub-stream is used, at most 3 retries.
* ``maxexp_f``        -- 1 draw (the exponent noise), always consumed.
* ``power_norm``      -- 1 draw (the steepness noise), always consumed.
* ``grassman_flat``   -- kappa draws (per-value noise), always consumed;
                         randomized SVD mode probes from sub-stream 1.
* ``lu_precondition`` -- no draws.

Operators with ``noise_scale = 0`` scale their draws by zero, so their
output is a deterministic function of the input matrix alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NumericalError, ValidationError
from .linalg import jacobi_eigh, lu_decompose, lu_solve_inverse_product, randomized_svd, spd_sqrt_inv_sqrt, svd_jacobi
from .rng import RngStream
from .validation import check_feature_map, check_square, check_vector

NEWTON_SCHULZ_DEFAULT_ITERS = 20
NEWTON_SCHULZ_PAPER_PRESET = 10
_DEGENERATE_RETRIES = 3


@dataclass(frozen=True)
class Sfa:
    k: int = 1

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ValidationError(f"Sfa.k must be an integer >= 0, got {self.k!r}")


@dataclass(frozen=True)
class MaxExpF:
    eta: float
    noise_scale: float = 0.0
    ns_iters: int = NEWTON_SCHULZ_DEFAULT_ITERS

    def __post_init__(self):
        if not self.eta > 0:
            raise ValidationError("MaxExpF.eta must be positive")
        _check_noise_and_iters(self.noise_scale, self.ns_iters)


@dataclass(frozen=True)
class PowerNorm:
    beta: float
    noise_scale: float = 0.0
    variant: str = "plain"
    ns_iters: int = NEWTON_SCHULZ_DEFAULT_ITERS

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError("PowerNorm.beta must lie in [0, 1]")
        if self.variant not in ("plain", "star"):
            raise ValidationError(f"PowerNorm.variant must be 'plain' or 'star', got {self.variant!r}")
        _check_noise_and_iters(self.noise_scale, self.ns_iters)


@dataclass(frozen=True)
class Grassman:
    kappa: int
    noise_scale: float = 0.0
    svd_mode: str = "exact"
    ns_iters: int = NEWTON_SCHULZ_DEFAULT_ITERS

    def __post_init__(self):
        if not isinstance(self.kappa, (int, np.integer)) or self.kappa < 1:
            raise ValidationError("Grassman.kappa must be an integer >= 1")
        if self.svd_mode not in ("exact", "randomized"):
            raise ValidationError(f"Grassman.svd_mode must be 'exact' or 'randomized', got {self.svd_mode!r}")
        _check_noise_and_iters(self.noise_scale, self.ns_iters)


@dataclass(frozen=True)
class Precondition:
    pass


AugmentSpec = Union[Sfa, MaxExpF, PowerNorm, Grassman, Precondition]


def _check_noise_and_iters(noise_scale, ns_iters) -> None:
    if noise_scale < 0:
        raise ValidationError("noise_scale must be >= 0")
    if not isinstance(ns_iters, (int, np.integer)) or ns_iters < 1:
        raise ValidationError("ns_iters must be an integer >= 1")


_SPEC_SCHEMA = {
    "sfa": (Sfa, {"k": int}),
    "maxexp": (MaxExpF, {"eta": float, "noise_scale": float, "ns_iters": int}),
    "powernorm": (PowerNorm, {"beta": float, "noise_scale": float, "variant": str, "ns_iters": int}),
    "grassman": (Grassman, {"kappa": int, "noise_scale": float, "svd_mode": str, "ns_iters": int}),
    "precondition": (Precondition, {}),
}


def spec_from_mapping(mapping) -> AugmentSpec:
    """Build an operator spec from a plain dict (the CLI/binding schema).

    The mapping must contain an ``op`` key naming the operator; every other
    key must be a parameter of that operator.  Unknown keys are rejected by
    name so configs cannot silently misspell a parameter.
    """
    if not isinstance(mapping, dict):
        raise ValidationError("operator spec must be a mapping")
    data = dict(mapping)
    op = data.pop("op", None)
    if op not in _SPEC_SCHEMA:
        raise ValidationError(f"unknown operator {op!r}; expected one of {sorted(_SPEC_SCHEMA)}")
    cls, fields = _SPEC_SCHEMA[op]
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ValidationError(f"unknown key {key!r} for operator {op!r}")
        caster = fields[key]
        if caster is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValidationError(f"{op}.{key} must be an integer, got {value!r}")
            kwargs[key] = int(value)
        elif caster is float:
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def spec_to_mapping(spec: AugmentSpec) -> dict:
    name = {Sfa: "sfa", MaxExpF: "maxexp", PowerNorm: "powernorm",
            Grassman: "grassman", Precondition: "precondition"}[type(spec)]
    out = {"op": name}
    for key in getattr(spec, "__dataclass_fields__", {}):
        out[key] = getattr(spec, key)
    return out


@dataclass(frozen=True)
class SfaOutput:
    """Result of the incomplete power iteration: H~ plus the vectors used."""

    augmented: np.ndarray
    r_final: np.ndarray
    r_init: np.ndarray


def _sfa_apply(h: np.ndarray, r: np.ndarray, flip_sign: bool = False) -> np.ndarray:
    """H - (H r) r^T / ||r||^2; the shared path for the operator and the
    k=1 closed form, so the two agree bit-for-bit given the same r."""
    s = float(r @ r)
    low_rank = np.outer(h @ r, r) / s
    return h + low_rank if flip_sign else h - low_rank


def sfa_forward(h, k: int, stream: RngStream) -> SfaOutput:
    """Incomplete power iteration: subtract the rank-1 estimate from H.

    r0 ~ N(0, I); r is multiplied by H^T H exactly k times (k = 0 keeps r0
    itself); the output is H minus its projection onto the final direction.
    """
    h = check_feature_map(h)
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValidationError(f"k must be an integer >= 0, got {k!r}")
    d = h.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        gram = h.T @ h
        scale = max(float(np.sqrt(np.sum(h * h))), 1.0)
    floor = 1e-300 * scale
    for attempt in range(_DEGENERATE_RETRIES + 1):
        r0 = stream.generator(jumps=attempt).standard_normal(d)
        r = r0
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(k):
                r = gram @ r
        if not np.all(np.isfinite(r)):
            raise NumericalError("power iteration overflowed; spectrum scale too large for this k")
        if np.linalg.norm(r) > floor:
            return SfaOutput(_sfa_apply(h, r), r, r0)
    raise NumericalError("start vector degenerate after 3 resampling attempts")


def sfa_k1_closed_form(h, r0, flip_sign: bool = False) -> np.ndarray:
    """The k = 1 closed form, sharing the operator's arithmetic path.

    ``flip_sign`` negates the subtraction; it exists only for fault
    injection in the verification suite.
    """
    h = check_feature_map(h)
    r0 = check_vector(r0, h.shape[1], "r0")
    r = (h.T @ h) @ r0
    if np.linalg.norm(r) == 0.0:
        raise NumericalError("degenerate r0: H^T H r0 vanished")
    return _sfa_apply(h, r, flip_sign=flip_sign)


def sfa_backward(h, r0, grad_out) -> np.ndarray:
    """Gradient of <grad_out, sfa(H; r0)> in H for the k = 1 path, r0 fixed.

    Derived by differentiating H - H r r^T / ||r||^2 with r = H^T H r0.
    """
    h = check_feature_map(h)
    g = check_feature_map(grad_out, "grad_out")
    if g.shape != h.shape:
        raise ValidationError(f"grad_out shape {g.shape} must match H shape {h.shape}")
    r0 = check_vector(r0, h.shape[1], "r0")
    r = h.T @ (h @ r0)
    s = float(r @ r)
    if s == 0.0:
        raise NumericalError("degenerate r0: H^T H r0 vanished")
    proj = np.outer(r, r) / s
    c = float(r @ (g.T @ (h @ r)))
    w = (h.T @ (g @ r) + g.T @ (h @ r)) / s - (2.0 * c / s**2) * r
    return g - g @ proj - np.outer(h @ r0, w) - np.outer(h @ w, r0)


def newton_schulz(m, zeta: int = NEWTON_SCHULZ_DEFAULT_ITERS) -> tuple[np.ndarray, np.ndarray]:
    """Coupled Newton-Schulz iteration for the SPD square root pair.

    Trace-normalise M, run zeta multiplication-only steps of
    P = (3I - Z Y)/2, then rescale by sqrt(Tr M).  Returns (A, B) with
    A ~ M^{1/2} and B ~ M^{-1/2}.  Divergence of ||Z Y - I|| (monitored
    every 5 iterations) aborts: it signals an input outside the
    convergence basin, e.g. one that is not positive definite.
    """
    m = check_feature_map(m)
    check_square(m, "Newton-Schulz input")
    scale = max(float(np.abs(m).max()), 1e-300)
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * scale):
        raise ValidationError("Newton-Schulz input must be symmetric")
    if not isinstance(zeta, (int, np.integer)) or zeta < 1:
        raise ValidationError("zeta must be an integer >= 1")
    trace = float(np.trace(m))
    if trace <= 0.0:
        raise NumericalError("Newton-Schulz input must have positive trace")
    dim = m.shape[0]
    eye = np.eye(dim)
    m_norm = m / trace
    p = 0.5 * (3.0 * eye - m_norm)
    y = m_norm @ p
    z = p
    best_residual = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, zeta + 1):
            zy = z @ y
            if i % 5 == 0 or i == zeta:
                residual = float(np.sqrt(np.sum((zy - eye) ** 2)))
                if not np.isfinite(residual) or residual > 10.0 * best_residual + 1e-12:
                    raise NumericalError("Newton-Schulz iteration diverged; input likely not SPD")
                best_residual = min(best_residual, residual)
            p = 0.5 * (3.0 * eye - zy)
            y = y @ p
            z = p @ z
    root_trace = np.sqrt(trace)
    return y * root_trace, z / root_trace


def _gram_roots(h: np.ndarray, ns_iters: int) -> tuple[np.ndarray, np.ndarray]:
    """A = (H^T H)^{1/2}, B = (H^T H)^{-1/2} via Newton-Schulz, validated."""
    gram = h.T @ h
    a, b = newton_schulz(gram, ns_iters)
    d = gram.shape[0]
    residual = float(np.sqrt(np.sum((a @ b - np.eye(d)) ** 2)))
    if residual > 1e-6 * np.sqrt(d):
        raise NumericalError(
            "inverse square root failed to converge; feature map is rank deficient or too ill-conditioned")
    return a, b


def _int_matrix_power(m: np.ndarray, exponent: int) -> np.ndarray:
    result = np.eye(m.shape[0])
    base = m
    e = exponent
    while e > 0:
        if e & 1:
            result = result @ base
        base = base @ base
        e >>= 1
    return result


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def maxexp_f(h, spec: MaxExpF, stream: RngStream) -> np.ndarray:
    """MaxExp(F): H B (I - (I - A/Tr A)^e) with e = round(eta + noise), e >= 1."""
    h = check_feature_map(h)
    a, b = _gram_roots(h, spec.ns_iters)
    delta = spec.noise_scale * float(stream.generator().standard_normal())
    exponent = max(1, _round_half_away(spec.eta + delta))
    d = h.shape[1]
    t = np.eye(d) - a / np.trace(a)
    c = np.eye(d) - _int_matrix_power(t, exponent)
    return h @ b @ c


def power_norm(h, spec: PowerNorm, stream: RngStream) -> np.ndarray:
    """Power normalisation: spectrum maps to (1-b)s^0.5 + b s^0.75.

    The plain variant clamps the noisy coefficient to [0, 1]; the star
    variant admits the wider [0, 2] range, letting the square-root term's
    weight go negative.
    """
    h = check_feature_map(h)
    a, b = _gram_roots(h, spec.ns_iters)
    delta = spec.noise_scale * float(stream.generator().standard_normal())
    hi = 1.0 if spec.variant == "plain" else 2.0
    coeff = min(max(spec.beta + delta, 0.0), hi)
    a_half, _ = newton_schulz(a, spec.ns_iters)
    a_quarter, _ = newton_schulz(a_half, spec.ns_iters)
    mix = (1.0 - coeff) * a_half + coeff * (a_half @ a_quarter)
    return h @ b @ mix


def grassman_flat(h, spec: Grassman, stream: RngStream) -> np.ndarray:
    """Grassman flattening: kappa leading singular values -> 1 + noise, rest -> 0."""
    h = check_feature_map(h)
    d = h.shape[1]
    if spec.kappa > d:
        raise ValidationError(f"kappa = {spec.kappa} exceeds the number of columns {d}")
    _, b = _gram_roots(h, spec.ns_iters)
    noise = spec.noise_scale * stream.generator().standard_normal(spec.kappa)
    flat = np.maximum(1.0 + noise, 0.0)  # keep flattened values non-negative
    if spec.svd_mode == "exact":
        v = svd_jacobi(h).V[:, :spec.kappa]
    else:
        fac = randomized_svd(h, rank=spec.kappa, oversample=min(8, d - spec.kappa),
                             power_iters=2, stream=stream.substream(1))
        v = fac.V
    return h @ b @ ((v * flat) @ v.T)


def lu_precondition(h) -> np.ndarray:
    """LU preconditioning baseline: equalise the Gram spectrum.

    The preconditioner U^{-1} L^{-1} (with pivoting folded in) is the exact
    Gram inverse, so the preconditioned Gram is the identity up to roundoff.
    A rectangular output is recovered as H B S with B = (H^T H)^{-1/2} and
    S the symmetrized square root of the preconditioned Gram.
    """
    h = check_feature_map(h)
    gram = h.T @ h
    l, u, perm = lu_decompose(gram)
    precond_gram = lu_solve_inverse_product(l, u, perm, gram)
    sym = 0.5 * (precond_gram + precond_gram.T)
    s_root, _ = spd_sqrt_inv_sqrt(sym)
    _, b = spd_sqrt_inv_sqrt(gram)
    return h @ b @ s_root


def apply_operator(h, spec: AugmentSpec, stream: RngStream) -> np.ndarray:
    """Dispatch a parsed operator spec; returns the augmented feature map."""
    if isinstance(spec, Sfa):
        return sfa_forward(h, spec.k, stream).augmented
    if isinstance(spec, MaxExpF):
        return maxexp_f(h, spec, stream)
    if isinstance(spec, PowerNorm):
        return power_norm(h, spec, stream)
    if isinstance(spec, Grassman):
        return grassman_flat(h, spec, stream)
    if isinstance(spec, Precondition):
        return lu_precondition(h)
    raise ValidationError(f"unknown operator spec {spec!r}")


def draw_count(spec: AugmentSpec, n_cols: int) -> int:
    """Number of documented random draws an operator consumes."""
    if isinstance(spec, Sfa):
        return n_cols
    if isinstance(spec, (MaxExpF, PowerNorm)):
        return 1
    if isinstance(spec, Grassman):
        return spec.kappa
    return 0

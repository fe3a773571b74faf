"""Estimator-style wrappers around the augmentation operators.

These follow the scikit-learn transformer protocol (``fit`` validates and
records the input width, ``transform`` applies the operator, parameters are
introspectable via ``get_params``/``set_params``) so the operators drop
into sklearn pipelines without a hard dependency on scikit-learn itself.

``transform`` is deterministic: it derives its random stream from
``random_state``, so the same fitted augmenter maps the same input to the
same output.  Pass an explicit ``stream`` to draw a fresh augmentation.
"""

from __future__ import annotations

import inspect

import numpy as np

from . import operators as ops
from .errors import ValidationError
from .rng import RngStream
from .validation import check_feature_map


class BaseAugmenter:
    """Minimal sklearn-compatible base: parameter plumbing plus validation."""

    def _param_names(self):
        signature = inspect.signature(type(self).__init__)
        return [p for p in signature.parameters if p != "self"]

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValidationError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def fit(self, X, y=None):
        X = check_feature_map(X)
        self.n_features_in_ = X.shape[1]
        self._spec = self._build_spec()
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def transform(self, X, stream: RngStream | None = None) -> np.ndarray:
        if not hasattr(self, "n_features_in_"):
            raise ValidationError(f"{type(self).__name__} is not fitted; call fit first")
        X = check_feature_map(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"X has {X.shape[1]} features but {type(self).__name__} was fitted with {self.n_features_in_}")
        if stream is None:
            stream = RngStream(int(self.random_state or 0))
        return ops.apply_operator(X, self._spec, stream)

    def _build_spec(self) -> ops.AugmentSpec:
        raise NotImplementedError


class SfaAugmenter(BaseAugmenter):
    """Incomplete-power-iteration spectral augmentation."""

    def __init__(self, k: int = 1, random_state: int | None = None):
        self.k = k
        self.random_state = random_state

    def _build_spec(self):
        return ops.Sfa(k=self.k)


class MaxExpAugmenter(BaseAugmenter):
    def __init__(self, eta: float = 10.0, noise_scale: float = 0.0,
                 ns_iters: int = ops.NEWTON_SCHULZ_DEFAULT_ITERS,
                 random_state: int | None = None):
        self.eta = eta
        self.noise_scale = noise_scale
        self.ns_iters = ns_iters
        self.random_state = random_state

    def _build_spec(self):
        return ops.MaxExpF(eta=self.eta, noise_scale=self.noise_scale, ns_iters=self.ns_iters)


class PowerNormAugmenter(BaseAugmenter):
    def __init__(self, beta: float = 0.5, noise_scale: float = 0.0, variant: str = "plain",
                 ns_iters: int = ops.NEWTON_SCHULZ_DEFAULT_ITERS,
                 random_state: int | None = None):
        self.beta = beta
        self.noise_scale = noise_scale
        self.variant = variant
        self.ns_iters = ns_iters
        self.random_state = random_state

    def _build_spec(self):
        return ops.PowerNorm(beta=self.beta, noise_scale=self.noise_scale,
                             variant=self.variant, ns_iters=self.ns_iters)


class GrassmanAugmenter(BaseAugmenter):
    def __init__(self, kappa: int = 1, noise_scale: float = 0.0, svd_mode: str = "exact",
                 ns_iters: int = ops.NEWTON_SCHULZ_DEFAULT_ITERS,
                 random_state: int | None = None):
        self.kappa = kappa
        self.noise_scale = noise_scale
        self.svd_mode = svd_mode
        self.ns_iters = ns_iters
        self.random_state = random_state

    def _build_spec(self):
        return ops.Grassman(kappa=self.kappa, noise_scale=self.noise_scale,
                            svd_mode=self.svd_mode, ns_iters=self.ns_iters)


class PreconditionAugmenter(BaseAugmenter):
    def __init__(self, random_state: int | None = None):
        self.random_state = random_state

    def _build_spec(self):
        return ops.Precondition()

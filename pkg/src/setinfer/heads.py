"""Predictive heads: Gaussian mixture for continuous targets, dot-product
categorical for discrete targets.

Both operate on a fused width-d target token. Continuous densities live
in normalized value space; the raw-space density is the normalized one
times the Jacobian 1/(max - min). Mass outside [0, 1] for a mixture
component is sum_i w_i [Phi((0-mu_i)/s_i) + 1 - Phi((1-mu_i)/s_i)]; with
means inside the unit interval and scales around 0.1 the grid-integrated
mass over [0, 1] stays above 0.98, which the acceptance suite checks on
trained models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, FeatureSpec, denormalize
from .errors import DataError, NumericsError
from .semantic import category_embeddings
from .tensor import Parameters, Tensor, concat

LOG_2PI = float(np.log(2.0 * np.pi))
SIGMA_FLOOR = 1e-3
WEIGHT_TOL = 1e-6


def init_head_params(params: Parameters, d: int, components: int, rng):
    params.add(
        "head.gmm.w", rng.normal(scale=1.0 / np.sqrt(d), size=(d, 3 * components))
    )
    bias = np.zeros(3 * components)
    bias[components : 2 * components] = np.linspace(0.05, 0.95, components)
    bias[2 * components :] = np.log(np.expm1(0.15))  # softplus^-1(0.15)
    params.add("head.gmm.b", bias)
    params.add("head.cat.w", rng.normal(scale=1.0 / np.sqrt(d), size=(d, d)))
    params.add("head.cat.b", np.zeros(d))


def gmm_params(params: Parameters, token: Tensor, components: int, sigma_floor=SIGMA_FLOOR):
    """Mixture (log-weights, weights, means, scales) from a fused token."""
    raw = token @ params["head.gmm.w"] + params["head.gmm.b"]
    wraw = raw[:components]
    mu = raw[components : 2 * components]
    sigma = raw[2 * components :].softplus() + sigma_floor
    logw = wraw - wraw.logsumexp(axis=-1, keepdims=True)
    omega = logw.exp()
    total = float(omega.data.sum())
    if abs(total - 1.0) > WEIGHT_TOL:
        raise NumericsError(f"mixture weights sum to {total}, off simplex")
    return logw, omega, mu, sigma


def gmm_log_likelihood(logw: Tensor, mu: Tensor, sigma: Tensor, v: float) -> Tensor:
    if not 0.0 <= v <= 1.0:
        raise DataError(f"continuous target {v} outside [0, 1]; normalize first")
    z = (v - mu) / sigma
    comp = logw - sigma.log() - 0.5 * LOG_2PI - 0.5 * z * z
    return comp.logsumexp(axis=-1)


def categorical_logits(params: Parameters, token: Tensor, cat_embs: Tensor) -> Tensor:
    """Dot product of the head embedding with each category embedding."""
    z = token @ params["head.cat.w"] + params["head.cat.b"]
    return cat_embs @ z


def categorical_log_likelihood(logits: Tensor, index: int) -> Tensor:
    n = logits.shape[-1]
    if not 0 <= index < n:
        raise DataError(f"category index {index} out of range [0, {n})")
    return logits[index] - logits.logsumexp(axis=-1)


# -- inference-side distributions (plain numpy, no graph) ----------------


@dataclass(frozen=True)
class GmmPrediction:
    spec: FeatureSpec
    omega: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def log_density(self, v) -> np.ndarray:
        """log p(v) in normalized space; v scalar or array in [0, 1]."""
        v = np.asarray(v, dtype=np.float64)
        if np.any((v < 0.0) | (v > 1.0)):
            raise DataError("continuous value outside [0, 1]; normalize first")
        z = (v[..., None] - self.mu) / self.sigma
        comp = np.log(self.omega) - np.log(self.sigma) - 0.5 * LOG_2PI - 0.5 * z * z
        m = comp.max(axis=-1, keepdims=True)
        return (m + np.log(np.exp(comp - m).sum(axis=-1, keepdims=True)))[..., 0]

    def log_density_raw(self, raw) -> np.ndarray:
        """Raw-space log density: change of variables by the stored range."""
        lo, hi = self.spec.range
        norm = (np.asarray(raw, dtype=np.float64) - lo) / (hi - lo)
        return self.log_density(norm) - np.log(hi - lo)

    @property
    def mean(self) -> float:
        return float((self.omega * self.mu).sum())

    @property
    def mean_raw(self) -> float:
        return denormalize(self.spec, self.mean)

    def sample(self, rng: np.random.Generator, n: int):
        """n draws in normalized space, clamped to [0, 1]; reports clamp rate."""
        comp = rng.choice(len(self.omega), size=n, p=self.omega / self.omega.sum())
        draws = rng.normal(self.mu[comp], self.sigma[comp])
        clamped = (draws < 0.0) | (draws > 1.0)
        return np.clip(draws, 0.0, 1.0), float(clamped.mean())

    def summary(self) -> dict:
        return {
            "type": CONTINUOUS,
            "mean": self.mean,
            "mean_raw": self.mean_raw,
            "mixture": {
                "weights": self.omega.tolist(),
                "means": self.mu.tolist(),
                "scales": self.sigma.tolist(),
            },
        }


@dataclass(frozen=True)
class CategoricalPrediction:
    spec: FeatureSpec
    probs: np.ndarray

    def log_prob(self, index: int) -> float:
        if not 0 <= index < len(self.probs):
            raise DataError(
                f"category index {index} out of range [0, {len(self.probs)})"
            )
        return float(np.log(self.probs[index]))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def argmax_choice(self) -> str:
        return self.spec.choices[self.argmax]

    def sample(self, rng: np.random.Generator, n: int):
        draws = rng.choice(len(self.probs), size=n, p=self.probs / self.probs.sum())
        return draws, 0.0

    def summary(self) -> dict:
        return {
            "type": CATEGORICAL,
            "probs": {c: float(p) for c, p in zip(self.spec.choices, self.probs)},
            "argmax": self.argmax_choice,
        }


def prediction_from_heads(params, token, spec, text_fn, components, pool_mode="attention"):
    """Numpy-land prediction for one target from its fused token."""
    if spec.ftype == CONTINUOUS:
        _, omega, mu, sigma = gmm_params(params, token, components)
        return GmmPrediction(
            spec=spec,
            omega=omega.data.copy(),
            mu=mu.data.copy(),
            sigma=sigma.data.copy(),
        )
    cat = category_embeddings(params, spec, text_fn)
    logits = categorical_logits(params, token, cat)
    shifted = logits.data - logits.data.max()
    p = np.exp(shifted)
    return CategoricalPrediction(spec=spec, probs=p / p.sum())

"""Synthetic benchmark generator: a latent category draws an isotropic
Gaussian pair in input and output space, with controllable centroid
separation, plus the exponential mis-clustering bound for comparison.

Exact Gaussians stand in for the sub-Gaussian mixtures the method is analyzed
under; that is all the desk-scale verification here needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .core import PointSet, rng_from


@dataclass(frozen=True)
class MixtureSpec:
    """C latent groups with isotropic Gaussian input/output distributions."""

    priors: np.ndarray
    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma: float = 1.0
    sigma_y: float | None = None

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        mu_x = np.asarray(self.mu_x, dtype=np.float64)
        mu_y = np.asarray(self.mu_y, dtype=np.float64)
        if priors.ndim != 1 or (priors < 0).any() or abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError("priors must be nonnegative and sum to 1 within 1e-12")
        C = priors.shape[0]
        if mu_x.ndim != 2 or mu_x.shape[0] != C or mu_y.ndim != 2 or mu_y.shape[0] != C:
            raise ValueError("mu_x and mu_y must be C x d matrices")
        if self.sigma <= 0 or (self.sigma_y is not None and self.sigma_y <= 0):
            raise ValueError("noise scale must be positive")
        if C >= 2:
            if pdist(mu_x).min() <= 0 or pdist(mu_y).min() <= 0:
                raise ValueError("component means must be distinct")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "mu_x", mu_x)
        object.__setattr__(self, "mu_y", mu_y)

    @property
    def n_clusters(self) -> int:
        return self.priors.shape[0]

    @property
    def sigma_x(self) -> float:
        return self.sigma

    @property
    def sigma_y_eff(self) -> float:
        return self.sigma if self.sigma_y is None else self.sigma_y

    def to_json(self) -> str:
        return json.dumps({
            "priors": self.priors.tolist(),
            "mu_x": self.mu_x.tolist(),
            "mu_y": self.mu_y.tolist(),
            "sigma": self.sigma,
            "sigma_y": self.sigma_y,
        })

    @classmethod
    def from_json(cls, text: str) -> "MixtureSpec":
        obj = json.loads(text)
        return cls(priors=np.asarray(obj["priors"]), mu_x=np.asarray(obj["mu_x"]),
                   mu_y=np.asarray(obj["mu_y"]), sigma=float(obj["sigma"]),
                   sigma_y=None if obj.get("sigma_y") is None else float(obj["sigma_y"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "MixtureSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class BoundReport:
    """Separations and the exponential mis-clustering bound exp(-d^2/(16 s^2))."""

    delta_x: float
    delta_y: float
    bound_x: float
    bound_y: float


def sample_mixture(spec: MixtureSpec, n: int, seed: int) -> tuple[PointSet, PointSet]:
    """Draw n latent labels from the priors, then Gaussian input and output
    vectors around the corresponding means.  Both PointSets share ids and
    carry the latents; hiding the pairing is the splitter's job."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_from(seed)
    latents = rng.choice(spec.n_clusters, size=n, p=spec.priors)
    x = spec.mu_x[latents] + spec.sigma_x * rng.standard_normal((n, spec.mu_x.shape[1]))
    y = spec.mu_y[latents] + spec.sigma_y_eff * rng.standard_normal((n, spec.mu_y.shape[1]))
    ids = np.arange(n)
    return (PointSet(points=x, ids=ids, latent=latents),
            PointSet(points=y, ids=ids.copy(), latent=latents.copy()))


def make_separated_spec(C: int, d: int, d_prime: int, delta_over_sigma: float,
                        seed: int) -> MixtureSpec:
    """Random mean arrangement rescaled so the realized minimum pairwise
    separation equals ``delta_over_sigma`` exactly (sigma = 1, uniform priors)."""
    if C < 1:
        raise ValueError("C must be >= 1")
    if d < 1 or d_prime < 1:
        raise ValueError("dimensions must be >= 1")
    if delta_over_sigma <= 0:
        raise ValueError("delta_over_sigma must be positive")
    rng = rng_from(seed)
    mu_x = _scaled_means(C, d, delta_over_sigma, rng)
    mu_y = _scaled_means(C, d_prime, delta_over_sigma, rng)
    return MixtureSpec(priors=np.full(C, 1.0 / C), mu_x=mu_x, mu_y=mu_y, sigma=1.0)


def _scaled_means(C: int, d: int, target: float, rng: np.random.Generator) -> np.ndarray:
    mu = rng.standard_normal((C, d))
    if C == 1:
        return mu
    for _ in range(100):
        m = pdist(mu).min()
        if m > 0:
            return mu * (target / m)
        mu = rng.standard_normal((C, d))
    raise ValueError(f"could not place {C} distinct means in {d} dimensions")


def eval_bound(spec: MixtureSpec) -> BoundReport:
    """Separations of the spec's means and exp(-delta^2 / (16 sigma^2))."""
    if spec.n_clusters < 2:
        raise ValueError("separation bound needs C >= 2")
    delta_x = float(pdist(spec.mu_x).min())
    delta_y = float(pdist(spec.mu_y).min())
    return BoundReport(
        delta_x=delta_x,
        delta_y=delta_y,
        bound_x=float(np.exp(-delta_x ** 2 / (16.0 * spec.sigma_x ** 2))),
        bound_y=float(np.exp(-delta_y ** 2 / (16.0 * spec.sigma_y_eff ** 2))),
    )

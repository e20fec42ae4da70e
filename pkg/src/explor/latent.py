"""PCA latent space and radial expansion augmentation.

Training happens in a PCA latent space. The expansion operator pushes latent
points outward along their own ray, z' = (1 + |eps|) z with eps ~ N(0, sigma^2),
so |eps| is half-normal with mean sigma * sqrt(2 / pi). No draw ever moves a
point toward the origin; the augmented cloud strictly surrounds the original.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import generator


@dataclass
class LatentMap:
    """Affine map into the top principal components.

    mean : (d,) column means of the fit data
    components : (s, d) orthonormal rows, each flipped so its largest-magnitude
        entry is positive (fixes the SVD sign ambiguity)
    explained_variance : (s,) sample variances along each component
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def d(self) -> int:
        return self.components.shape[1]

    @property
    def s(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class ExpansionConfig:
    sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def fit_pca(X, n_components: int | None = None) -> LatentMap:
    """Fit a LatentMap on an (N, d) matrix via SVD of the centered data.

    The latent width is min(n_components, N - 1, d); passing None uses the
    default cap of 128. N >= 2 rows are required so variances exist.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    cap = 128 if n_components is None else int(n_components)
    if cap < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    s = min(cap, n - 1, d)
    mean = X.mean(axis=0)
    _, sing, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:s].copy()
    # Sign convention: make the largest-magnitude entry of each row positive.
    flip = comps[np.arange(s), np.argmax(np.abs(comps), axis=1)] < 0
    comps[flip] *= -1.0
    return LatentMap(mean=mean, components=comps, explained_variance=(sing[:s] ** 2) / (n - 1))


def encode(lm: LatentMap, X) -> np.ndarray:
    """Project rows of X into the latent space."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != lm.d:
        raise ValueError(f"expected shape (N, {lm.d}), got {X.shape}")
    return (X - lm.mean) @ lm.components.T


def decode(lm: LatentMap, Z) -> np.ndarray:
    """Map latent rows back to the original feature space."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != lm.s:
        raise ValueError(f"expected shape (N, {lm.s}), got {Z.shape}")
    return Z @ lm.components + lm.mean


def expand(Z, cfg: ExpansionConfig) -> np.ndarray:
    """Radially expand each latent row by its own factor 1 + |eps|."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {Z.shape}")
    rng = generator(cfg.seed)
    eps = rng.normal(0.0, cfg.sigma, size=Z.shape[0])
    return Z * (1.0 + np.abs(eps))[:, None]


def expand_with(Z: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Expansion with explicit draws; used by training loops that own the stream."""
    return Z * (1.0 + np.abs(eps))[:, None]

"""Gaussian measures on R^d and affine maps with Gaussian noise.

An affine-Gaussian map sends x to N(Ax + b, noise).  The class is
closed under composition, pushforward, graphs, convolution and exact
Bayesian inversion, all computed in closed form.  A discretization
bridge turns low-dimensional Gaussian problems into finite ones on a
grid of cell centers, so the finite machinery can cross-check the
closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridError, NotPSDError, SchemaError, SingularMatrixError
from .measures import FiniteMeasure, FiniteSpace, _freeze, prob_measure, product_space
from .kernels import FiniteKernel, finite_kernel
from .bayes import BayesModel

# Covariances may be asymmetric by at most this much (then symmetrized).
SYMMETRY_TOL = 1e-10
# Eigenvalues in [-EIG_TOL, 0) are clamped to 0; anything lower is rejected.
EIG_TOL = 1e-10
# Refuse linear solves beyond this condition-number estimate.
MAX_CONDITION = 1e12


def _clean_cov(cov, what: str) -> np.ndarray:
    """Validate and repair a covariance matrix.

    Enforces symmetry within SYMMETRY_TOL, then clamps eigenvalues in
    [-EIG_TOL, 0) to zero.  Eigenvalues below -EIG_TOL raise.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise SchemaError(f"{what} must be a square matrix, got {cov.shape}")
    skew = float(np.max(np.abs(cov - cov.T), initial=0.0))
    if skew > SYMMETRY_TOL:
        raise NotPSDError(f"{what} asymmetric by {skew:.3g} (> {SYMMETRY_TOL})")
    cov = (cov + cov.T) / 2.0
    eigs = np.linalg.eigvalsh(cov)
    lo = float(eigs.min(initial=0.0))
    if lo < -EIG_TOL:
        raise NotPSDError(f"{what} has eigenvalue {lo:.3g} below -{EIG_TOL}")
    if lo < 0.0:
        vals, vecs = np.linalg.eigh(cov)
        vals = np.where(vals < 0.0, 0.0, vals)
        cov = vecs @ np.diag(vals) @ vecs.T
        cov = (cov + cov.T) / 2.0
    return cov


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """N(mean, cov) on R^d.  cov may be singular (degenerate directions
    are allowed); it just has to be symmetric PSD within tolerance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = _clean_cov(self.cov, "covariance")
        if cov.shape[0] != mean.shape[0]:
            raise SchemaError(
                f"mean has dim {mean.shape[0]} but cov is {cov.shape}")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "cov", _freeze(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class AffineGaussianMap:
    """The map x -> N(Ax + b, noise) from R^n to R^m."""

    A: np.ndarray
    b: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2:
            raise SchemaError(f"A must be a matrix, got shape {A.shape}")
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        noise = _clean_cov(self.noise, "noise covariance")
        if b.shape[0] != A.shape[0] or noise.shape[0] != A.shape[0]:
            raise SchemaError(
                f"inconsistent output dims: A {A.shape}, b {b.shape}, noise {noise.shape}")
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))
        object.__setattr__(self, "noise", _freeze(noise))

    @property
    def input_dim(self) -> int:
        return self.A.shape[1]

    @property
    def output_dim(self) -> int:
        return self.A.shape[0]

    def at(self, x) -> GaussianMeasure:
        """The output distribution for a fixed (noise-free) input point."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        return GaussianMeasure(self.A @ x + self.b, self.noise)


def gaussians_equal(g1: GaussianMeasure, g2: GaussianMeasure,
                    tol: float = 1e-10) -> bool:
    if g1.dim != g2.dim:
        return False
    return (float(np.max(np.abs(g1.mean - g2.mean), initial=0.0)) <= tol
            and float(np.max(np.abs(g1.cov - g2.cov), initial=0.0)) <= tol)


def gauss_compose(t1: AffineGaussianMap, t2: AffineGaussianMap) -> AffineGaussianMap:
    """First t1, then t2: x -> N(A2 A1 x + A2 b1 + b2,
    A2 S1 A2' + S2)."""
    if t1.output_dim != t2.input_dim:
        raise SchemaError("maps do not compose: dimension mismatch")
    A = t2.A @ t1.A
    b = t2.A @ t1.b + t2.b
    noise = t2.A @ t1.noise @ t2.A.T + t2.noise
    return AffineGaussianMap(A, b, noise)


def gauss_pushforward(t: AffineGaussianMap, g: GaussianMeasure) -> GaussianMeasure:
    if t.input_dim != g.dim:
        raise SchemaError("measure dimension does not match map input")
    return GaussianMeasure(t.A @ g.mean + t.b, t.A @ g.cov @ t.A.T + t.noise)


def gauss_graph(t: AffineGaussianMap, g: GaussianMeasure) -> GaussianMeasure:
    """Joint of (input, output) when the input is distributed as g and
    the output is produced by t.  Input block comes first."""
    if t.input_dim != g.dim:
        raise SchemaError("measure dimension does not match map input")
    S, A = g.cov, t.A
    cross = S @ A.T
    out_cov = A @ S @ A.T + t.noise
    top = np.hstack([S, cross])
    bottom = np.hstack([cross.T, out_cov])
    mean = np.concatenate([g.mean, A @ g.mean + t.b])
    return GaussianMeasure(mean, np.vstack([top, bottom]))


def gauss_convolve(g1: GaussianMeasure, g2: GaussianMeasure) -> GaussianMeasure:
    """Distribution of the sum of independent draws."""
    if g1.dim != g2.dim:
        raise SchemaError("convolution needs equal dimensions")
    return GaussianMeasure(g1.mean + g2.mean, g1.cov + g2.cov)


def gauss_marginal(g: GaussianMeasure, indices: Sequence[int]) -> GaussianMeasure:
    idx = list(indices)
    return GaussianMeasure(g.mean[idx], g.cov[np.ix_(idx, idx)])


def gauss_swap_blocks(g: GaussianMeasure, head_dim: int) -> GaussianMeasure:
    """Reorder coordinates so the first head_dim entries move to the end."""
    if not 0 < head_dim < g.dim:
        raise SchemaError("head_dim must split the dimensions in two")
    perm = list(range(head_dim, g.dim)) + list(range(head_dim))
    return GaussianMeasure(g.mean[perm], g.cov[np.ix_(perm, perm)])


def _checked_solve(K: np.ndarray, rhs: np.ndarray,
                   max_condition: float) -> np.ndarray:
    cond = float(np.linalg.cond(K))
    if not math.isfinite(cond) or cond > max_condition:
        raise SingularMatrixError(condition=cond)
    return np.linalg.solve(K, rhs)


def gauss_invert(t: AffineGaussianMap, prior: GaussianMeasure,
                 jitter: float = 0.0,
                 max_condition: float = MAX_CONDITION) -> AffineGaussianMap:
    """Bayesian inversion: the map y -> posterior N over the input.

    With prior N(m, S) and observation y of N(Ax + b, noise), the
    posterior is N(m + G(y - Am - b), S - G A S) with
    G = S A' (A S A' + noise)^-1.

    No jitter is ever added silently; pass ``jitter`` > 0 to
    regularize the predictive covariance explicitly.  A singular or
    too-ill-conditioned predictive covariance raises
    SingularMatrixError carrying the condition estimate.
    """
    if t.input_dim != prior.dim:
        raise SchemaError("prior dimension does not match map input")
    S, A = prior.cov, t.A
    K = A @ S @ A.T + t.noise
    if jitter > 0.0:
        K = K + jitter * np.eye(K.shape[0])
    G = _checked_solve(K, A @ S, max_condition).T     # S A' K^-1
    post_A = G
    post_b = prior.mean - G @ (A @ prior.mean + t.b)
    post_cov = S - G @ A @ S
    return AffineGaussianMap(post_A, post_b, post_cov)


def gauss_condition(joint: GaussianMeasure, head_dim: int, y,
                    jitter: float = 0.0,
                    max_condition: float = MAX_CONDITION) -> GaussianMeasure:
    """Condition a joint N on its tail block taking the value y,
    returning the head-block conditional.

    Implemented through generic inversion of the tail-projection map,
    so it exercises the same code path as model inversion.
    """
    tail_dim = joint.dim - head_dim
    if tail_dim <= 0 or head_dim <= 0:
        raise SchemaError("head_dim must split the dimensions in two")
    proj = AffineGaussianMap(
        np.hstack([np.zeros((tail_dim, head_dim)), np.eye(tail_dim)]),
        np.zeros(tail_dim),
        np.zeros((tail_dim, tail_dim)))
    post = gauss_invert(proj, joint, jitter=jitter,
                        max_condition=max_condition).at(y)
    return gauss_marginal(post, range(head_dim))


# ---------------------------------------------------------------------------
# discretization bridge

@dataclass(frozen=True)
class GridSpec:
    """A regular grid of cells per axis; measures discretize onto the
    cell centers.  Supports one or two axes."""

    lower: tuple
    upper: tuple
    step: tuple

    def __post_init__(self):
        low = tuple(float(x) for x in np.atleast_1d(self.lower))
        up = tuple(float(x) for x in np.atleast_1d(self.upper))
        st = tuple(float(x) for x in np.atleast_1d(self.step))
        if not len(low) == len(up) == len(st):
            raise SchemaError("grid lower/upper/step lengths differ")
        if len(low) not in (1, 2):
            raise SchemaError("only 1-D and 2-D grids are supported")
        for lo, hi, s in zip(low, up, st):
            if s <= 0 or hi <= lo:
                raise SchemaError("grid needs upper > lower and step > 0")
        object.__setattr__(self, "lower", low)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "step", st)

    @property
    def ndim(self) -> int:
        return len(self.lower)

    def centers(self, axis: int) -> np.ndarray:
        lo, hi, s = self.lower[axis], self.upper[axis], self.step[axis]
        count = int(round((hi - lo) / s))
        if count < 1:
            raise SchemaError("grid axis has no cells")
        return lo + (np.arange(count) + 0.5) * s

    @classmethod
    def around(cls, center, sigma, half_width_sigmas: float = 8.0,
               step_sigmas: float = 0.01) -> "GridSpec":
        """A grid covering center +- half_width_sigmas * sigma with
        step step_sigmas * sigma on each axis."""
        c = np.atleast_1d(np.asarray(center, dtype=np.float64))
        s = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
        if (s <= 0).any():
            raise SchemaError("grid sigma must be positive")
        return cls(tuple(c - half_width_sigmas * s),
                   tuple(c + half_width_sigmas * s),
                   tuple(step_sigmas * s))


def _coverage_check(g: GaussianMeasure, grid: GridSpec) -> None:
    """Documented coarseness thresholds: the grid must reach 3 standard
    deviations past the mean on each side and resolve each axis with a
    step of at most half a standard deviation."""
    for axis in range(grid.ndim):
        sd = math.sqrt(g.cov[axis, axis])
        if sd <= 0:
            raise GridError("cannot discretize a degenerate axis "
                            f"(zero variance on axis {axis})")
        mu = g.mean[axis]
        if grid.lower[axis] > mu - 3 * sd or grid.upper[axis] < mu + 3 * sd:
            raise GridError(
                f"grid axis {axis} spans [{grid.lower[axis]:.6g}, "
                f"{grid.upper[axis]:.6g}] but needs to cover "
                f"[{mu - 3 * sd:.6g}, {mu + 3 * sd:.6g}]")
        if grid.step[axis] > sd / 2:
            raise GridError(
                f"grid step {grid.step[axis]:.6g} on axis {axis} is coarser "
                f"than half a standard deviation ({sd / 2:.6g})")


def gauss_discretize(g: GaussianMeasure, grid: GridSpec,
                     strict: bool = True) -> FiniteMeasure:
    """Project a Gaussian onto a finite measure on grid cell centers.

    Weights are the density at the centers, renormalized to total mass
    one.  With ``strict`` (the default) the grid must satisfy the
    coverage and resolution thresholds; pass strict=False to discretize
    tail slices where coverage is intentionally partial.
    """
    if g.dim != grid.ndim:
        raise SchemaError(
            f"grid has {grid.ndim} axes but the measure has dim {g.dim}")
    if strict:
        _coverage_check(g, grid)
    det = float(np.linalg.det(g.cov))
    if det <= 0:
        raise GridError("cannot discretize: covariance is singular")
    if grid.ndim == 1:
        centers = grid.centers(0)
        z = (centers - g.mean[0]) / math.sqrt(g.cov[0, 0])
        dens = np.exp(-0.5 * z * z)
        space = FiniteSpace(tuple(float(c) for c in centers))
    else:
        c0, c1 = grid.centers(0), grid.centers(1)
        mesh = np.stack(np.meshgrid(c0, c1, indexing="ij"), axis=-1)
        diff = mesh.reshape(-1, 2) - g.mean
        sol = np.linalg.solve(g.cov, diff.T)
        quad = np.einsum("ij,ji->i", diff, sol)
        dens = np.exp(-0.5 * (quad - quad.min()))
        ax0 = FiniteSpace(tuple(float(c) for c in c0))
        ax1 = FiniteSpace(tuple(float(c) for c in c1))
        space = product_space([ax0, ax1])
    total = float(dens.sum())
    if total <= 0:
        raise GridError("grid catches no probability mass")
    return prob_measure(space, dens / total)


def discretize_model_1d(prior: GaussianMeasure, t: AffineGaussianMap,
                        half_width_sigmas: float = 8.0,
                        step_sigmas: float = 0.01) -> BayesModel:
    """Turn a one-dimensional Gaussian model into a finite one.

    The parameter grid covers the prior, the observation grid covers
    the predictive; each sampling row is the discretized output
    distribution at the parameter cell center (tail rows clip off-grid
    mass, which carries negligible prior weight).
    """
    if prior.dim != 1 or t.input_dim != 1 or t.output_dim != 1:
        raise SchemaError("this bridge handles 1-D models only")
    pgrid = GridSpec.around(prior.mean[0], math.sqrt(prior.cov[0, 0]),
                            half_width_sigmas, step_sigmas)
    prior_m = gauss_discretize(prior, pgrid)
    pred = gauss_pushforward(t, prior)
    ogrid = GridSpec.around(pred.mean[0], math.sqrt(pred.cov[0, 0]),
                            half_width_sigmas, step_sigmas)
    obs_space = gauss_discretize(pred, ogrid).space
    rows = np.stack([
        gauss_discretize(t.at([c]), ogrid, strict=False).weights
        for c in prior_m.space.labels])
    return BayesModel(prior=prior_m,
                      sampling=finite_kernel(prior_m.space, obs_space, rows))

"""Supervised models: priors over labeling hypotheses, conditioning on
training pairs, and predictive distributions on test inputs.

The finite side pairs a prior over hypotheses with one stochastic
supervisor kernel per hypothesis; observations at a tuple of inputs are
conditionally independent given the hypothesis.  The Gaussian-process
side does the analogous computation in closed form on R^d and can be
cross-checked against generic Gaussian conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SchemaError
from .measures import (
    FiniteMeasure,
    FiniteSpace,
    measures_equal,
    product_measure,
    product_space,
    require_same_scalar,
)
from .kernels import FiniteKernel, finite_kernel, marginal, pushforward
from .bayes import BayesModel, bayes_invert
from .gaussian import (
    MAX_CONDITION,
    GaussianMeasure,
    _checked_solve,
)


@dataclass(frozen=True, eq=False)
class SupervisedModel:
    """A prior over hypotheses plus one supervisor kernel (inputs to
    labels) per hypothesis, listed in hypothesis-space order."""

    prior: FiniteMeasure
    supervisors: tuple

    def __post_init__(self):
        if not isinstance(self.supervisors, tuple):
            object.__setattr__(self, "supervisors", tuple(self.supervisors))
        if len(self.supervisors) != self.prior.space.size:
            raise SchemaError("need exactly one supervisor per hypothesis")
        srcs = {k.source for k in self.supervisors}
        tgts = {k.target for k in self.supervisors}
        if len(srcs) != 1 or len(tgts) != 1:
            raise SchemaError("supervisors must share input and label spaces")
        require_same_scalar(self.prior, *self.supervisors)
        if not self.prior.is_probability():
            raise SchemaError("prior must be a probability measure")

    @property
    def hypotheses(self) -> FiniteSpace:
        return self.prior.space

    @property
    def inputs(self) -> FiniteSpace:
        return self.supervisors[0].source

    @property
    def labels(self) -> FiniteSpace:
        return self.supervisors[0].target

    @property
    def scalar(self) -> str:
        return self.prior.scalar


@dataclass(frozen=True)
class TrainingSet:
    """An ordered tuple of (input, label) pairs.  May be empty."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((x, y) for x, y in self.pairs)
        object.__setattr__(self, "pairs", pairs)

    @property
    def inputs(self) -> tuple:
        return tuple(x for x, _ in self.pairs)

    @property
    def outputs(self) -> tuple:
        return tuple(y for _, y in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class TestInputs:
    """A nonempty ordered tuple of query inputs."""

    __test__ = False          # not a pytest class, despite the name

    points: tuple

    def __post_init__(self):
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) == 0:
            raise SchemaError("test inputs must be nonempty")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class InferenceResult:
    """A measure plus a flag marking that the conditioning event had
    zero mass (in which case the measure fell back to the prior)."""

    measure: FiniteMeasure
    null_evidence: bool


def sampling_kernel(model: SupervisedModel, xs: Sequence) -> FiniteKernel:
    """The kernel from hypotheses to label tuples at the given inputs.

    Row theta is the product of the supervisor's rows at x_1..x_m:
    labels are conditionally independent given the hypothesis.  With a
    single input the target is the label space itself (no 1-tuples).
    """
    xs = tuple(xs)
    if len(xs) == 0:
        raise SchemaError("need at least one input point")
    for x in xs:
        if x not in model.inputs:
            raise SchemaError(f"input {x!r} not in the model's input space")
    rows = []
    for k in model.supervisors:
        rows.append(product_measure([k.row(x) for x in xs]).weights)
    target = product_space([model.labels] * len(xs))
    return finite_kernel(model.hypotheses, target, np.stack(rows))


def _observation_label(ys: tuple):
    return ys[0] if len(ys) == 1 else tuple(ys)


def posterior(model: SupervisedModel, s: TrainingSet) -> InferenceResult:
    """Condition the prior on the training pairs.

    An empty training set returns the prior untouched.  If the observed
    label tuple has zero marginal probability the result is the prior
    with null_evidence set.
    """
    if len(s) == 0:
        return InferenceResult(model.prior, False)
    sk = sampling_kernel(model, s.inputs)
    inv = bayes_invert(BayesModel(prior=model.prior, sampling=sk))
    obs = _observation_label(s.outputs)
    if obs not in sk.target:
        raise SchemaError(f"observed labels {obs!r} outside the label space")
    if obs in inv.null_points:
        return InferenceResult(model.prior, True)
    return InferenceResult(inv.kernel.row(obs), False)


def predictive(model: SupervisedModel, s: TrainingSet,
               t: TestInputs) -> InferenceResult:
    """Posterior-predictive joint over the label tuple at the test
    inputs: push the posterior through the test-point sampling kernel."""
    post = posterior(model, s)
    sk = sampling_kernel(model, t.points)
    return InferenceResult(pushforward(sk, post.measure), post.null_evidence)


def label_marginals(joint: FiniteMeasure) -> tuple:
    """Per-coordinate marginals of a joint over a label tuple space.
    A measure on a non-product space is its own single marginal."""
    if joint.space.factors is None:
        return (joint,)
    return tuple(marginal(joint, i)
                 for i in range(len(joint.space.factors)))


def restrict_inputs(model: SupervisedModel, keep: Sequence) -> SupervisedModel:
    """The same model with every supervisor restricted to a subset of
    the input space (rows dropped, label space unchanged)."""
    keep = tuple(keep)
    sub = FiniteSpace(keep)
    idx = [model.inputs.index(x) for x in keep]
    supers = tuple(
        finite_kernel(sub, k.target, k.rows[idx]) for k in model.supervisors)
    return SupervisedModel(prior=model.prior, supervisors=supers)


def restriction_consistency(model: SupervisedModel, s: TrainingSet,
                            t: TestInputs, tol: float = 1e-9) -> bool:
    """Conditioning and predicting only ever touch the supervisors at
    the queried inputs, so restricting the model to the inputs that
    appear in s and t must change neither posterior nor predictive."""
    used = set(s.inputs) | set(t.points)
    keep = tuple(x for x in model.inputs.labels if x in used)
    small = restrict_inputs(model, keep)
    p_full, p_small = posterior(model, s), posterior(small, s)
    q_full, q_small = predictive(model, s, t), predictive(small, s, t)
    return (p_full.null_evidence == p_small.null_evidence
            and q_full.null_evidence == q_small.null_evidence
            and measures_equal(p_full.measure, p_small.measure, tol)
            and measures_equal(q_full.measure, q_small.measure, tol))


# ---------------------------------------------------------------------------
# Gaussian-process regression

@dataclass(frozen=True)
class GPModel:
    """A Gaussian process prior: mean function, covariance function and
    observation noise variance."""

    mean_fn: Callable
    cov_fn: Callable
    noise_var: float

    def __post_init__(self):
        if self.noise_var < 0:
            raise SchemaError("noise variance must be nonnegative")


def zero_mean():
    return lambda x: 0.0


def constant_mean(c: float):
    c = float(c)
    return lambda x: c


def squared_exponential(length_scale: float = 1.0, amplitude: float = 1.0):
    """k(x, x') = amplitude^2 * exp(-|x - x'|^2 / (2 length_scale^2)),
    accepting scalar or vector inputs."""
    if length_scale <= 0 or amplitude <= 0:
        raise SchemaError("length_scale and amplitude must be positive")
    two_l2 = 2.0 * length_scale * length_scale
    a2 = amplitude * amplitude

    def k(x, x2):
        d = np.asarray(x, dtype=np.float64) - np.asarray(x2, dtype=np.float64)
        return a2 * float(np.exp(-np.sum(d * d) / two_l2))

    return k


def _gram(cov_fn, xs, ys) -> np.ndarray:
    return np.array([[cov_fn(x, y) for y in ys] for x in xs],
                    dtype=np.float64)


def _mean_vec(mean_fn, xs) -> np.ndarray:
    return np.array([float(mean_fn(x)) for x in xs], dtype=np.float64)


def gp_joint(gp: GPModel, train_xs: Sequence, test_xs: Sequence) -> GaussianMeasure:
    """The joint Gaussian over (test values, noisy training outputs).

    Test block first; observation noise enters only the training block.
    Gram matrices that are not PSD within tolerance are rejected by the
    measure constructor.
    """
    train_xs, test_xs = list(train_xs), list(test_xs)
    if not train_xs or not test_xs:
        raise SchemaError("need at least one training and one test input")
    ktt = _gram(gp.cov_fn, test_xs, test_xs)
    ktx = _gram(gp.cov_fn, test_xs, train_xs)
    kxx = _gram(gp.cov_fn, train_xs, train_xs)
    kxx = kxx + gp.noise_var * np.eye(len(train_xs))
    cov = np.vstack([np.hstack([ktt, ktx]),
                     np.hstack([ktx.T, kxx])])
    mean = np.concatenate([_mean_vec(gp.mean_fn, test_xs),
                           _mean_vec(gp.mean_fn, train_xs)])
    return GaussianMeasure(mean, cov)


def gp_posterior_predictive(gp: GPModel, s: TrainingSet, t: TestInputs,
                            jitter: float = 0.0,
                            max_condition: float = MAX_CONDITION) -> GaussianMeasure:
    """Closed-form posterior predictive at the test inputs:

    mean  = m(T) + K(T,X) C^-1 (Y - m(X))
    cov   = K(T,T) - K(T,X) C^-1 K(X,T)

    with C = K(X,X) + noise_var * I (+ optional explicit jitter).
    """
    if len(s) == 0:
        raise SchemaError("posterior predictive needs training data")
    xs, ys = list(s.inputs), np.asarray(s.outputs, dtype=np.float64)
    ts = list(t.points)
    ktt = _gram(gp.cov_fn, ts, ts)
    ktx = _gram(gp.cov_fn, ts, xs)
    C = _gram(gp.cov_fn, xs, xs) + gp.noise_var * np.eye(len(xs))
    if jitter > 0.0:
        C = C + jitter * np.eye(len(xs))
    resid = ys - _mean_vec(gp.mean_fn, xs)
    alpha = _checked_solve(C, resid, max_condition)
    gain = _checked_solve(C, ktx.T, max_condition)
    mean = _mean_vec(gp.mean_fn, ts) + ktx @ alpha
    cov = ktt - ktx @ gain
    return GaussianMeasure(mean, cov)

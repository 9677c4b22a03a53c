"""Probabilistic transitions between finite spaces and their algebra.

A kernel is stored as a row-stochastic matrix: row x is the probability
measure the kernel assigns to source point x.  Deterministic maps embed
as one-hot kernels.  Composition, pushforward of measures, pullback of
observables, independent joins, graphs and mirroring all reduce to
dense array arithmetic, exact on the rational backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NonProductSpaceError, SchemaError
from .measures import (
    DEFAULT_TOLERANCE,
    FLOAT,
    NEG_WEIGHT_TOL,
    PROB_SUM_TOL,
    RATIONAL,
    BoundedFunction,
    FiniteMeasure,
    FiniteSpace,
    _freeze,
    arrays_equal,
    as_scalar_array,
    product_space,
    require_same_scalar,
    zeros_like_backend,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class MeasurableMap:
    """A function between finite spaces, given by one target label per
    source label (in source order)."""

    source: FiniteSpace
    target: FiniteSpace
    assignment: tuple

    def __post_init__(self):
        if not isinstance(self.assignment, tuple):
            object.__setattr__(self, "assignment", tuple(self.assignment))
        if len(self.assignment) != self.source.size:
            raise SchemaError("assignment length must match source size")
        for lab in self.assignment:
            if lab not in self.target:
                raise SchemaError(f"assignment value {lab!r} not in target space")

    def __call__(self, label):
        return self.assignment[self.source.index(label)]


def identity_map(space: FiniteSpace) -> MeasurableMap:
    return MeasurableMap(space, space, space.labels)


def map_compose(f: MeasurableMap, g: MeasurableMap) -> MeasurableMap:
    """The map x -> g(f(x))."""
    if f.target != g.source:
        raise SchemaError("maps do not compose: target/source mismatch")
    return MeasurableMap(f.source, g.target,
                         tuple(g(lab) for lab in f.assignment))


def projection_map(prod: FiniteSpace, axis: int) -> MeasurableMap:
    """Coordinate projection out of a product space."""
    factors = prod.require_factors()
    if not 0 <= axis < len(factors):
        raise SchemaError(f"axis {axis} out of range for {len(factors)} factors")
    return MeasurableMap(prod, factors[axis],
                         tuple(lab[axis] for lab in prod.labels))


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """A probabilistic transition: one probability row per source label."""

    source: FiniteSpace
    target: FiniteSpace
    rows: np.ndarray

    @property
    def scalar(self) -> str:
        return FLOAT if self.rows.dtype == np.float64 else RATIONAL

    def row(self, label) -> FiniteMeasure:
        return FiniteMeasure(self.target,
                             _freeze(self.rows[self.source.index(label)]))

    def as_float(self) -> "FiniteKernel":
        if self.scalar == FLOAT:
            return self
        return FiniteKernel(self.source, self.target,
                            _freeze(self.rows.astype(np.float64)))


def finite_kernel(source: FiniteSpace, target: FiniteSpace, rows,
                  scalar: str | None = None) -> FiniteKernel:
    """Validate and build a kernel.  Every row must be a probability
    vector: exactly on the rational backend, within the float
    tolerances otherwise (tiny negatives clamped)."""
    arr = as_scalar_array(rows, scalar)
    if arr.ndim != 2 or arr.shape != (source.size, target.size):
        raise SchemaError(
            f"expected rows of shape {(source.size, target.size)}, got {arr.shape}")
    if arr.dtype == np.float64:
        low = float(arr.min(initial=0.0))
        if low < -NEG_WEIGHT_TOL:
            raise SchemaError(f"negative kernel entry {low:.6g}")
        if low < 0.0:
            arr = np.where(arr < 0.0, 0.0, arr)
        sums = arr.sum(axis=1)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > PROB_SUM_TOL:
            raise SchemaError(
                f"kernel row sums off by {worst:.3g}, outside tolerance {PROB_SUM_TOL}")
    else:
        if (arr < _ZERO).any():
            raise SchemaError("negative kernel entry")
        sums = arr.sum(axis=1)
        if (sums != _ONE).any():
            bad = next(s for s in sums if s != _ONE)
            raise SchemaError(f"rational kernel row sums to {bad}, not 1")
    return FiniteKernel(source, target, _freeze(arr))


def kernels_equal(t1: FiniteKernel, t2: FiniteKernel,
                  tol: float = DEFAULT_TOLERANCE) -> bool:
    if t1.source != t2.source or t1.target != t2.target:
        return False
    scalar = require_same_scalar(t1, t2)
    return arrays_equal(t1.rows, t2.rows, scalar, tol)


def dirac_kernel(f: MeasurableMap, scalar: str = RATIONAL) -> FiniteKernel:
    """Embed a deterministic map as a kernel of point masses."""
    rows = zeros_like_backend((f.source.size, f.target.size), scalar)
    one = _ONE if scalar == RATIONAL else 1.0
    for i, lab in enumerate(f.assignment):
        rows[i, f.target.index(lab)] = one
    return FiniteKernel(f.source, f.target, _freeze(rows))


def identity_kernel(space: FiniteSpace, scalar: str = RATIONAL) -> FiniteKernel:
    return dirac_kernel(identity_map(space), scalar)


def compose(t1: FiniteKernel, t2: FiniteKernel) -> FiniteKernel:
    """First t1, then t2.  Rows multiply as row-stochastic matrices."""
    if t1.target != t2.source:
        raise SchemaError("kernels do not compose: target/source mismatch")
    require_same_scalar(t1, t2)
    return FiniteKernel(t1.source, t2.target, _freeze(t1.rows @ t2.rows))


def pushforward(t: FiniteKernel, m: FiniteMeasure) -> FiniteMeasure:
    """The image measure: (t_* m)(y) = sum_x t(y|x) m(x).  Linear in m,
    so signed measures are allowed; probability mass is preserved."""
    if m.space != t.source:
        raise SchemaError("measure lives on the wrong space for this kernel")
    require_same_scalar(t, m)
    return FiniteMeasure(t.target, _freeze(m.weights @ t.rows))


def pullback(t: FiniteKernel, g: BoundedFunction) -> BoundedFunction:
    """Averaged observable: (t^* g)(x) = sum_y g(y) t(y|x).  Sends the
    constant-one function to the constant-one function and never
    increases the sup norm."""
    if g.space != t.target:
        raise SchemaError("function lives on the wrong space for this kernel")
    require_same_scalar(t, g)
    return BoundedFunction(t.source, _freeze(t.rows @ g.values))


def join(t1: FiniteKernel, t2: FiniteKernel) -> FiniteKernel:
    """Pointwise-independent coupling: source x goes to the product
    measure row_1(x) x row_2(x) on target_1 x target_2."""
    if t1.source != t2.source:
        raise SchemaError("join needs a common source space")
    require_same_scalar(t1, t2)
    target = product_space([t1.target, t2.target])
    rows = (t1.rows[:, :, None] * t2.rows[:, None, :]).reshape(t1.source.size, -1)
    return FiniteKernel(t1.source, target, _freeze(rows))


def graph(t: FiniteKernel) -> FiniteKernel:
    """The kernel x -> delta_x x t(.|x) into source x target, i.e. the
    join of the identity with t."""
    n, m = t.source.size, t.target.size
    rows = zeros_like_backend((n, n * m), t.scalar)
    for i in range(n):
        rows[i, i * m:(i + 1) * m] = t.rows[i]
    return FiniteKernel(t.source, product_space([t.source, t.target]),
                        _freeze(rows))


def mirror(m: FiniteMeasure) -> FiniteMeasure:
    """Swap the two factors of a measure on a binary product."""
    factors = m.space.require_factors()
    if len(factors) != 2:
        raise NonProductSpaceError("mirror needs exactly two factors")
    a, b = factors
    w = m.weights.reshape(a.size, b.size).T.reshape(-1)
    return FiniteMeasure(product_space([b, a]), _freeze(w))


def marginal(m: FiniteMeasure, axis: int) -> FiniteMeasure:
    """Project a measure on a product space onto one factor."""
    factors = m.space.require_factors()
    if not 0 <= axis < len(factors):
        raise SchemaError(f"axis {axis} out of range for {len(factors)} factors")
    shaped = m.weights.reshape(tuple(f.size for f in factors))
    other = tuple(i for i in range(len(factors)) if i != axis)
    return FiniteMeasure(factors[axis], _freeze(shaped.sum(axis=other)))


def product_kernel(t1: FiniteKernel, t2: FiniteKernel) -> FiniteKernel:
    """The kernel t1 x t2 on the product of the sources, acting
    factorwise.  Built from joins of projection precompositions."""
    src = product_space([t1.source, t2.source])
    require_same_scalar(t1, t2)
    p1 = dirac_kernel(projection_map(src, 0), t1.scalar)
    p2 = dirac_kernel(projection_map(src, 1), t2.scalar)
    return join(compose(p1, t1), compose(p2, t2))

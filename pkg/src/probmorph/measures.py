"""Finite measurable spaces, measures on them, and bounded observables.

Everything is stored densely in numpy arrays.  Two scalar backends share
one code path: float64 arrays ("float") and object arrays holding
``fractions.Fraction`` ("rational").  Rational arithmetic is exact;
float arithmetic uses the tolerances below.  The two backends are never
mixed implicitly; convert with ``as_float``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BackendMismatchError,
    NonProductSpaceError,
    NotAbsolutelyContinuousError,
    SchemaError,
    UnsupportedStructureError,
)

RATIONAL = "rational"
FLOAT = "float"

# |sum(weights) - 1| must stay below this for a float probability measure.
PROB_SUM_TOL = 1e-9
# Float weights down to -1e-12 are treated as rounding noise and clamped to 0.
NEG_WEIGHT_TOL = 1e-12
# Default comparison tolerance for float-backed equality checks.
DEFAULT_TOLERANCE = 1e-9

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class FiniteSpace:
    """A finite measurable space: an ordered tuple of distinct labels.

    Labels may be any hashables; product spaces use tuples as labels,
    with the first factor varying slowest (row-major order).
    """

    labels: tuple

    def __post_init__(self):
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) == 0:
            raise SchemaError("a finite space needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise SchemaError("space labels must be distinct")

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def _index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise SchemaError(f"label {label!r} not in space") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    @cached_property
    def factors(self):
        """The cartesian factors of this space, or None.

        A space factors when every label is a k-tuple (k >= 2) and the
        labels enumerate the full cross product of the per-position
        label sets in row-major order.  This lets product structure
        survive serialization round-trips.
        """
        labs = self.labels
        if not all(isinstance(lab, tuple) for lab in labs):
            return None
        lengths = {len(lab) for lab in labs}
        if len(lengths) != 1:
            return None
        k = lengths.pop()
        if k < 2:
            return None
        per_axis = [tuple(dict.fromkeys(lab[j] for lab in labs)) for j in range(k)]
        if math.prod(len(p) for p in per_axis) != len(labs):
            return None
        if tuple(itertools.product(*per_axis)) != labs:
            return None
        return tuple(FiniteSpace(p) for p in per_axis)

    def require_factors(self) -> tuple["FiniteSpace", ...]:
        if self.factors is None:
            raise NonProductSpaceError(
                "space labels do not form a cartesian product")
        return self.factors


def product_space(spaces: Sequence[FiniteSpace]) -> FiniteSpace:
    """Cartesian product, first factor slowest.  A single space is
    returned unchanged (no 1-tuples are introduced)."""
    spaces = list(spaces)
    if not spaces:
        raise SchemaError("product of zero spaces is undefined here")
    if len(spaces) == 1:
        return spaces[0]
    labels = tuple(itertools.product(*(s.labels for s in spaces)))
    return FiniteSpace(labels)


# ---------------------------------------------------------------------------
# scalar backend helpers

def _scalar_of_dtype(arr: np.ndarray) -> str:
    return FLOAT if arr.dtype == np.float64 else RATIONAL


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise SchemaError(
        f"refusing to coerce {type(x).__name__} to an exact rational; "
        "pass ints, Fractions, or 'p/q' strings, or use scalar='float'")


def as_scalar_array(values, scalar: str | None = None) -> np.ndarray:
    """Coerce ``values`` to a 1-D or 2-D backend array.

    With ``scalar=None`` the backend is inferred: any float present
    selects the float backend, otherwise the rational one.
    """
    if isinstance(values, np.ndarray) and scalar is None:
        if values.dtype == np.float64:
            return values
        if values.dtype == object:
            flat = values.ravel()
            if all(isinstance(v, Fraction) for v in flat):
                return values
            values = values.tolist()
        else:
            values = values.tolist()
    if scalar is None:
        flat = np.asarray(values, dtype=object).ravel()
        has_float = any(isinstance(v, (float, np.floating)) for v in flat)
        scalar = FLOAT if has_float else RATIONAL
    if scalar == FLOAT:
        try:
            return np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise SchemaError(f"cannot coerce values to float64: {e}") from None
    if scalar == RATIONAL:
        arr = np.asarray(values, dtype=object)
        out = np.empty(arr.shape, dtype=object)
        it = np.nditer(arr, flags=["multi_index", "refs_ok"])
        for v in it:
            out[it.multi_index] = _to_fraction(v.item())
        return out
    raise SchemaError(f"unknown scalar backend {scalar!r}")


def zeros_like_backend(shape, scalar: str) -> np.ndarray:
    if scalar == FLOAT:
        return np.zeros(shape, dtype=np.float64)
    return np.full(shape, _ZERO, dtype=object)


def require_same_scalar(*objs) -> str:
    kinds = {o.scalar for o in objs}
    if len(kinds) != 1:
        raise BackendMismatchError(
            f"mixed scalar backends {sorted(kinds)}; convert explicitly with as_float()")
    return kinds.pop()


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy() if not arr.flags.owndata or arr.flags.writeable else arr
    arr.setflags(write=False)
    return arr


def arrays_equal(a: np.ndarray, b: np.ndarray, scalar: str,
                 tol: float = DEFAULT_TOLERANCE) -> bool:
    """Entrywise comparison: exact on the rational backend, max-abs
    difference at most ``tol`` on the float backend."""
    if a.shape != b.shape:
        return False
    if scalar == RATIONAL:
        return bool(np.equal(a, b).all())
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol)


# ---------------------------------------------------------------------------
# measures

@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """A signed measure on a finite space: one weight per label.

    Use the factory functions ``signed_measure``, ``measure`` and
    ``prob_measure``; they differ only in what they validate.
    """

    space: FiniteSpace
    weights: np.ndarray

    @property
    def scalar(self) -> str:
        return _scalar_of_dtype(self.weights)

    def weight(self, label):
        return self.weights[self.space.index(label)]

    def total(self):
        return self.weights.sum()

    def is_nonnegative(self) -> bool:
        if self.scalar == RATIONAL:
            return bool((self.weights >= _ZERO).all())
        return bool((self.weights >= 0.0).all())

    def is_probability(self, tol: float = PROB_SUM_TOL) -> bool:
        if not self.is_nonnegative():
            return False
        if self.scalar == RATIONAL:
            return self.total() == _ONE
        return abs(float(self.total()) - 1.0) <= tol

    def as_float(self) -> "FiniteMeasure":
        if self.scalar == FLOAT:
            return self
        return FiniteMeasure(self.space,
                             _freeze(self.weights.astype(np.float64)))


def signed_measure(space: FiniteSpace, weights, scalar: str | None = None) -> FiniteMeasure:
    arr = as_scalar_array(weights, scalar)
    if arr.ndim != 1 or arr.shape[0] != space.size:
        raise SchemaError(
            f"expected {space.size} weights, got shape {arr.shape}")
    return FiniteMeasure(space, _freeze(arr))


def measure(space: FiniteSpace, weights, scalar: str | None = None) -> FiniteMeasure:
    """A nonnegative measure.  Float weights in [-1e-12, 0) are clamped to 0."""
    m = signed_measure(space, weights, scalar)
    arr = m.weights
    if m.scalar == FLOAT:
        low = float(arr.min(initial=0.0))
        if low < -NEG_WEIGHT_TOL:
            raise SchemaError(f"negative weight {low:.6g} in a measure")
        if low < 0.0:
            arr = _freeze(np.where(arr < 0.0, 0.0, arr))
            m = FiniteMeasure(m.space, arr)
    elif not m.is_nonnegative():
        raise SchemaError("negative weight in a measure")
    return m


def prob_measure(space: FiniteSpace, weights, scalar: str | None = None) -> FiniteMeasure:
    """A probability measure.  Rational weights must sum to 1 exactly;
    float weights must sum to 1 within 1e-9."""
    m = measure(space, weights, scalar)
    if m.scalar == RATIONAL:
        if m.total() != _ONE:
            raise SchemaError(f"rational weights sum to {m.total()}, not 1")
    else:
        err = abs(float(m.total()) - 1.0)
        if err > PROB_SUM_TOL:
            raise SchemaError(
                f"float weights sum to 1{err:+.3g}, outside tolerance {PROB_SUM_TOL}")
    return m


def dirac_measure(space: FiniteSpace, label, scalar: str = RATIONAL) -> FiniteMeasure:
    w = zeros_like_backend(space.size, scalar)
    w[space.index(label)] = _ONE if scalar == RATIONAL else 1.0
    return FiniteMeasure(space, _freeze(w))


def uniform_measure(space: FiniteSpace, scalar: str = RATIONAL) -> FiniteMeasure:
    n = space.size
    if scalar == RATIONAL:
        w = np.full(n, Fraction(1, n), dtype=object)
    else:
        w = np.full(n, 1.0 / n)
    return FiniteMeasure(space, _freeze(w))


def measures_equal(m1: FiniteMeasure, m2: FiniteMeasure,
                   tol: float = DEFAULT_TOLERANCE) -> bool:
    """Same space (same label order) and entrywise-equal weights."""
    if m1.space != m2.space:
        return False
    scalar = require_same_scalar(m1, m2)
    return arrays_equal(m1.weights, m2.weights, scalar, tol)


# ---------------------------------------------------------------------------
# bounded observables

@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """A scalar-valued function on a finite space, stored as its value table."""

    space: FiniteSpace
    values: np.ndarray

    @property
    def scalar(self) -> str:
        return _scalar_of_dtype(self.values)

    def __call__(self, label):
        return self.values[self.space.index(label)]

    def sup_norm(self):
        return np.max(np.abs(self.values))

    def as_float(self) -> "BoundedFunction":
        if self.scalar == FLOAT:
            return self
        return BoundedFunction(self.space, _freeze(self.values.astype(np.float64)))


def bounded_function(space: FiniteSpace, values, scalar: str | None = None) -> BoundedFunction:
    arr = as_scalar_array(values, scalar)
    if arr.ndim != 1 or arr.shape[0] != space.size:
        raise SchemaError(
            f"expected {space.size} values, got shape {arr.shape}")
    return BoundedFunction(space, _freeze(arr))


def constant_function(space: FiniteSpace, value, scalar: str | None = None) -> BoundedFunction:
    return bounded_function(space, [value] * space.size, scalar)


def integrate(f: BoundedFunction, m: FiniteMeasure):
    """The pairing sum_x f(x) * mu(x)."""
    if f.space != m.space:
        raise SchemaError("function and measure live on different spaces")
    require_same_scalar(f, m)
    return (f.values * m.weights).sum()


def expectation(m: FiniteMeasure, f: Callable | None = None):
    """sum_x f(x) mu(x) with f applied to the labels (identity by default).

    With the default f the labels themselves must support arithmetic,
    e.g. the float cell centers of a discretization grid.
    """
    if f is None:
        vals = list(m.space.labels)
    else:
        vals = [f(lab) for lab in m.space.labels]
    out = None
    for w, v in zip(m.weights, vals):
        term = w * v
        out = term if out is None else out + term
    return out


# ---------------------------------------------------------------------------
# norms, products, convolution, densities

def tv_norm(m: FiniteMeasure):
    """Total variation norm: sum of absolute weights."""
    return np.abs(m.weights).sum()


def product_measure(ms: Sequence[FiniteMeasure]) -> FiniteMeasure:
    """Independent product on the product space, first factor slowest.
    A single measure is returned unchanged."""
    ms = list(ms)
    if not ms:
        raise SchemaError("product of zero measures is undefined here")
    if len(ms) == 1:
        return ms[0]
    require_same_scalar(*ms)
    space = product_space([m.space for m in ms])
    w = ms[0].weights
    for m in ms[1:]:
        w = (w[:, None] * m.weights[None, :]).reshape(-1)
    return FiniteMeasure(space, _freeze(w))


def _lattice_shape(space: FiniteSpace):
    """0 for scalar integer labels, d for d-tuples of integers; raises
    otherwise."""
    labs = space.labels
    if all(isinstance(l, (int, np.integer)) and not isinstance(l, bool)
           for l in labs):
        return 0
    if all(isinstance(l, tuple) for l in labs):
        dims = {len(l) for l in labs}
        if len(dims) == 1:
            d = dims.pop()
            if all(isinstance(c, (int, np.integer)) and not isinstance(c, bool)
                   for l in labs for c in l):
                return d
    raise UnsupportedStructureError(
        "convolution needs integer or integer-tuple labels")


def convolve(m1: FiniteMeasure, m2: FiniteMeasure) -> FiniteMeasure:
    """Distribution of the sum of independent draws.

    Both spaces must consist of integer lattice points of the same
    dimension.  The result's labels are the sorted sums of label pairs.
    """
    scalar = require_same_scalar(m1, m2)
    d1, d2 = _lattice_shape(m1.space), _lattice_shape(m2.space)
    if d1 != d2:
        raise UnsupportedStructureError(
            f"lattice dimensions differ: {d1} vs {d2}")
    acc: dict = {}
    for la, wa in zip(m1.space.labels, m1.weights):
        for lb, wb in zip(m2.space.labels, m2.weights):
            if d1 == 0:
                key = int(la) + int(lb)
            else:
                key = tuple(int(a) + int(b) for a, b in zip(la, lb))
            prev = acc.get(key)
            w = wa * wb
            acc[key] = w if prev is None else prev + w
    labels = tuple(sorted(acc))
    space = FiniteSpace(labels)
    w = as_scalar_array([acc[l] for l in labels], scalar)
    return FiniteMeasure(space, _freeze(w))


def radon_nikodym(nu: FiniteMeasure, mu: FiniteMeasure) -> BoundedFunction:
    """The density d(nu)/d(mu) as a bounded function.

    Raises NotAbsolutelyContinuousError (with a witness label) if nu
    has mass at a point where mu vanishes.  On such null points of mu
    the density is set to 0.
    """
    if nu.space != mu.space:
        raise SchemaError("measures live on different spaces")
    scalar = require_same_scalar(nu, mu)
    zero = _ZERO if scalar == RATIONAL else 0.0
    vals = zeros_like_backend(mu.space.size, scalar)
    for i, lab in enumerate(mu.space.labels):
        if mu.weights[i] == zero:
            if nu.weights[i] != zero:
                raise NotAbsolutelyContinuousError(witness=lab)
        else:
            vals[i] = nu.weights[i] / mu.weights[i]
    return BoundedFunction(mu.space, _freeze(vals))

"""JSON and CSV interchange for spaces, measures, kernels and models.

Rational scalars travel as "p/q" strings, floats as JSON numbers.
``dumps_canonical`` emits a canonical encoding (sorted keys, floats
printed with 17 significant digits, which round-trips float64 exactly),
so identical inputs always produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction

import numpy as np

from .errors import SchemaError
from .measures import (
    FLOAT,
    RATIONAL,
    FiniteMeasure,
    FiniteSpace,
    signed_measure,
)
from .kernels import FiniteKernel, finite_kernel
from .bayes import BayesModel, InversionResult
from .gaussian import AffineGaussianMap, GaussianMeasure
from .supervised import (
    GPModel,
    SupervisedModel,
    TestInputs,
    TrainingSet,
    constant_mean,
    squared_exponential,
    zero_mean,
)


# ---------------------------------------------------------------------------
# canonical JSON text

def _write(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, Fraction):
        out.append(f'"{obj}"')
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise SchemaError("cannot serialize non-finite float")
        out.append(format(x, ".17g"))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise SchemaError("JSON object keys must be strings")
            if i:
                out.append(",")
            _write(key, out)
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), out)
    else:
        raise SchemaError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    out: list = []
    _write(obj, out)
    return "".join(out)


# ---------------------------------------------------------------------------
# shared pieces

def _require(d: dict, key: str, kinds, where: str):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in d:
        raise SchemaError(f"{where}: missing key {key!r}")
    v = d[key]
    if kinds is not None and not isinstance(v, kinds):
        raise SchemaError(f"{where}.{key}: wrong type {type(v).__name__}")
    return v


def label_to_jsonable(lab):
    if isinstance(lab, tuple):
        return [label_to_jsonable(x) for x in lab]
    if isinstance(lab, (str, int, float, np.integer, np.floating)):
        return int(lab) if isinstance(lab, np.integer) else (
            float(lab) if isinstance(lab, np.floating) else lab)
    raise SchemaError(f"label {lab!r} is not serializable")


def label_from_jsonable(v):
    if isinstance(v, list):
        return tuple(label_from_jsonable(x) for x in v)
    if isinstance(v, (str, int, float)) and not isinstance(v, bool):
        return v
    raise SchemaError(f"bad label value {v!r}")


def space_to_jsonable(s: FiniteSpace) -> list:
    return [label_to_jsonable(l) for l in s.labels]

def space_from_jsonable(v, where: str = "space") -> FiniteSpace:
    if not isinstance(v, list) or not v:
        raise SchemaError(f"{where}: expected a nonempty list of labels")
    return FiniteSpace(tuple(label_from_jsonable(x) for x in v))


def _weight_to_jsonable(w):
    if isinstance(w, Fraction):
        return str(w)
    return float(w)


def _weight_from_jsonable(v, scalar: str, where: str):
    if scalar == RATIONAL:
        if isinstance(v, str):
            try:
                return Fraction(v)
            except (ValueError, ZeroDivisionError) as e:
                raise SchemaError(f"{where}: bad rational {v!r}: {e}") from None
        if isinstance(v, int) and not isinstance(v, bool):
            return Fraction(v)
        raise SchemaError(f"{where}: rational weights must be 'p/q' strings or ints")
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise SchemaError(f"{where}: float weights must be numbers")


def _infer_scalar(flat, where: str) -> str:
    kinds = set()
    for v in flat:
        if isinstance(v, str):
            kinds.add(RATIONAL)
        elif isinstance(v, bool):
            raise SchemaError(f"{where}: booleans are not weights")
        elif isinstance(v, float):
            kinds.add(FLOAT)
        elif isinstance(v, int):
            pass                      # ints fit either backend
        else:
            raise SchemaError(f"{where}: bad weight {v!r}")
    if len(kinds) > 1:
        raise SchemaError(f"{where}: mixed rational strings and float numbers")
    return kinds.pop() if kinds else RATIONAL


# ---------------------------------------------------------------------------
# measures and kernels

def measure_to_jsonable(m: FiniteMeasure) -> dict:
    return {"labels": space_to_jsonable(m.space),
            "weights": [_weight_to_jsonable(w) for w in m.weights],
            "scalar": m.scalar}


def measure_from_jsonable(d, where: str = "measure") -> FiniteMeasure:
    labels = _require(d, "labels", list, where)
    weights = _require(d, "weights", list, where)
    scalar = d.get("scalar") if isinstance(d, dict) else None
    if scalar is None:
        scalar = _infer_scalar(weights, where)
    if scalar not in (RATIONAL, FLOAT):
        raise SchemaError(f"{where}.scalar: must be 'rational' or 'float'")
    space = space_from_jsonable(labels, f"{where}.labels")
    if len(weights) != space.size:
        raise SchemaError(f"{where}: {len(weights)} weights for {space.size} labels")
    ws = [_weight_from_jsonable(v, scalar, f"{where}.weights") for v in weights]
    return signed_measure(space, ws, scalar)


def kernel_to_jsonable(t: FiniteKernel) -> dict:
    return {"source": space_to_jsonable(t.source),
            "target": space_to_jsonable(t.target),
            "rows": [[_weight_to_jsonable(w) for w in row] for row in t.rows]}


def kernel_from_jsonable(d, where: str = "kernel") -> FiniteKernel:
    source = space_from_jsonable(_require(d, "source", list, where), f"{where}.source")
    target = space_from_jsonable(_require(d, "target", list, where), f"{where}.target")
    rows = _require(d, "rows", list, where)
    if len(rows) != source.size or any(not isinstance(r, list) for r in rows):
        raise SchemaError(f"{where}.rows: expected {source.size} rows (lists)")
    flat = [v for r in rows for v in r]
    scalar = _infer_scalar(flat, f"{where}.rows")
    parsed = [[_weight_from_jsonable(v, scalar, f"{where}.rows") for v in r]
              for r in rows]
    if any(len(r) != target.size for r in parsed):
        raise SchemaError(f"{where}.rows: rows must have {target.size} entries")
    return finite_kernel(source, target, parsed, scalar)


# ---------------------------------------------------------------------------
# models

def bayes_model_to_jsonable(m: BayesModel) -> dict:
    return {"prior": measure_to_jsonable(m.prior),
            "sampling": kernel_to_jsonable(m.sampling)}


def bayes_model_from_jsonable(d, where: str = "model") -> BayesModel:
    prior = measure_from_jsonable(_require(d, "prior", dict, where), f"{where}.prior")
    sampling = kernel_from_jsonable(_require(d, "sampling", dict, where),
                                    f"{where}.sampling")
    try:
        return BayesModel(prior=prior, sampling=sampling)
    except SchemaError as e:
        raise SchemaError(f"{where}: {e}") from None


def inversion_to_jsonable(r: InversionResult) -> dict:
    return {"kernel": kernel_to_jsonable(r.kernel),
            "null_points": [label_to_jsonable(l) for l in r.null_points]}


def supervised_model_to_jsonable(m: SupervisedModel) -> dict:
    return {"prior": measure_to_jsonable(m.prior),
            "inputs": space_to_jsonable(m.inputs),
            "labels": space_to_jsonable(m.labels),
            "supervisors": [
                [[_weight_to_jsonable(w) for w in row] for row in k.rows]
                for k in m.supervisors]}


def supervised_model_from_jsonable(d, where: str = "model") -> SupervisedModel:
    prior = measure_from_jsonable(_require(d, "prior", dict, where), f"{where}.prior")
    inputs = space_from_jsonable(_require(d, "inputs", list, where), f"{where}.inputs")
    labels = space_from_jsonable(_require(d, "labels", list, where), f"{where}.labels")
    sup = _require(d, "supervisors", list, where)
    if len(sup) != prior.space.size:
        raise SchemaError(f"{where}.supervisors: need one kernel per hypothesis")
    kernels = []
    for i, rows in enumerate(sup):
        kernels.append(kernel_from_jsonable(
            {"source": space_to_jsonable(inputs),
             "target": space_to_jsonable(labels),
             "rows": rows},
            f"{where}.supervisors[{i}]"))
    try:
        return SupervisedModel(prior=prior, supervisors=tuple(kernels))
    except SchemaError as e:
        raise SchemaError(f"{where}: {e}") from None


def training_from_jsonable(d, where: str = "training") -> TrainingSet:
    pairs = _require(d, "pairs", list, where)
    out = []
    for i, p in enumerate(pairs):
        if not isinstance(p, list) or len(p) != 2:
            raise SchemaError(f"{where}.pairs[{i}]: expected [input, label]")
        out.append((label_from_jsonable(p[0]), label_from_jsonable(p[1])))
    return TrainingSet(tuple(out))


def training_to_jsonable(s: TrainingSet) -> dict:
    return {"pairs": [[label_to_jsonable(x), label_to_jsonable(y)]
                      for x, y in s.pairs]}


def test_inputs_from_jsonable(d, where: str = "test") -> TestInputs:
    points = _require(d, "points", list, where)
    try:
        return TestInputs(tuple(label_from_jsonable(p) for p in points))
    except SchemaError as e:
        raise SchemaError(f"{where}: {e}") from None


def test_inputs_to_jsonable(t: TestInputs) -> dict:
    return {"points": [label_to_jsonable(p) for p in t.points]}


# ---------------------------------------------------------------------------
# Gaussian objects

def _float_matrix(v, where: str) -> np.ndarray:
    try:
        arr = np.asarray(v, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where}: not a numeric array: {e}") from None
    return arr


def gaussian_to_jsonable(g: GaussianMeasure) -> dict:
    return {"mean": g.mean.tolist(), "cov": g.cov.tolist()}


def gaussian_from_jsonable(d, where: str = "gaussian") -> GaussianMeasure:
    mean = _float_matrix(_require(d, "mean", list, where), f"{where}.mean")
    cov = _float_matrix(_require(d, "cov", list, where), f"{where}.cov")
    return GaussianMeasure(mean, cov)


def affine_map_to_jsonable(t: AffineGaussianMap) -> dict:
    return {"A": t.A.tolist(), "b": t.b.tolist(), "noise": t.noise.tolist()}


def affine_map_from_jsonable(d, where: str = "map") -> AffineGaussianMap:
    A = _float_matrix(_require(d, "A", list, where), f"{where}.A")
    b = _float_matrix(_require(d, "b", list, where), f"{where}.b")
    noise = _float_matrix(_require(d, "noise", list, where), f"{where}.noise")
    return AffineGaussianMap(A, b, noise)


def gp_model_from_jsonable(d, where: str = "gp") -> GPModel:
    kd = _require(d, "kernel", dict, where)
    family = _require(kd, "family", str, f"{where}.kernel")
    if family != "squared-exponential":
        raise SchemaError(f"{where}.kernel.family: unsupported family {family!r}")
    length = _require(kd, "length_scale", (int, float), f"{where}.kernel")
    amp = _require(kd, "amplitude", (int, float), f"{where}.kernel")
    md = d.get("mean", {"type": "zero"})
    mtype = _require(md, "type", str, f"{where}.mean")
    if mtype == "zero":
        mean_fn = zero_mean()
    elif mtype == "constant":
        mean_fn = constant_mean(_require(md, "value", (int, float), f"{where}.mean"))
    else:
        raise SchemaError(f"{where}.mean.type: unsupported type {mtype!r}")
    noise = _require(d, "noise_var", (int, float), where)
    if isinstance(noise, bool) or float(noise) < 0:
        raise SchemaError(f"{where}.noise_var: must be a nonnegative number")
    return GPModel(mean_fn=mean_fn,
                   cov_fn=squared_exponential(float(length), float(amp)),
                   noise_var=float(noise))


# ---------------------------------------------------------------------------
# CSV for GP regression

def _xy_columns(fieldnames, need_y: bool, where: str):
    names = [f.strip() for f in fieldnames or []]
    if "x" in names:
        xcols = ["x"]
    else:
        xcols = sorted((n for n in names if n.startswith("x") and n[1:].isdigit()),
                       key=lambda n: int(n[1:]))
        if not xcols:
            raise SchemaError(f"{where}: need an 'x' column (or x1..xd)")
    if need_y and "y" not in names:
        raise SchemaError(f"{where}: need a 'y' column")
    return xcols


def _parse_x(row, xcols, where):
    try:
        vals = [float(row[c]) for c in xcols]
    except (TypeError, ValueError, KeyError):
        raise SchemaError(f"{where}: non-numeric input value in row {row!r}") from None
    return vals[0] if len(vals) == 1 else tuple(vals)


def read_training_csv(path) -> TrainingSet:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        xcols = _xy_columns(reader.fieldnames, True, str(path))
        pairs = []
        for row in reader:
            x = _parse_x(row, xcols, str(path))
            try:
                y = float(row["y"])
            except (TypeError, ValueError):
                raise SchemaError(f"{str(path)}: non-numeric y in row {row!r}") from None
            pairs.append((x, y))
    return TrainingSet(tuple(pairs))


def read_test_csv(path) -> TestInputs:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        xcols = _xy_columns(reader.fieldnames, False, str(path))
        points = [_parse_x(row, xcols, str(path)) for row in reader]
    if not points:
        raise SchemaError(f"{str(path)}: no test points")
    return TestInputs(tuple(points))


def format_predictions_csv(t: TestInputs, pred: GaussianMeasure) -> str:
    """Rows of test input, predictive mean, predictive standard
    deviation, one row per test point, 17-significant-digit floats."""
    first = t.points[0]
    width = len(first) if isinstance(first, tuple) else 1
    header = (["x"] if width == 1 else [f"x{i + 1}" for i in range(width)])
    lines = [",".join(header + ["mean", "sd"])]
    for i, p in enumerate(t.points):
        coords = list(p) if isinstance(p, tuple) else [p]
        sd = math.sqrt(max(float(pred.cov[i, i]), 0.0))
        cells = [format(float(c), ".17g") for c in coords]
        cells.append(format(float(pred.mean[i]), ".17g"))
        cells.append(format(sd, ".17g"))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"

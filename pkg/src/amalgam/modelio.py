"""JSON model files.

Layout::

    {"base": {"blocks": [1, 1], "density": [[[0.5]], [[0.5]]]},
     "arms": [{"blocks": [2],
               "embedding": {"multiplicities": [[1, 1]]} | <dimA x dimB matrix>,
               "state": <density blocks>  |  "expectation": <dimB x dimA matrix>,
               "x": <blocks>}],
     "params": {"n_arms": 3, "max_len": 6, "max_degree": 4, "tol": 1e-9, "t": 0.25}}

Complex entries are written ``[re, im]``; real entries may be bare numbers.
A single arm is replicated ``params.n_arms`` times.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .finalg import BlockAlgebra, FaithfulState
from .ovfree import AmalgamatedModel, Arm, check_embedding, multiplicity_embedding
from .tolerance import resolve

PARAM_KEYS = {"n_arms", "max_len", "max_degree", "tol", "t", "q", "K"}
DATA_DIR = Path(__file__).with_name("data")


def _scalar(v, where):
    if isinstance(v, bool):
        raise ValidationError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {v!r}")


def parse_matrix(data, rows, cols, where):
    if not isinstance(data, list) or len(data) != rows:
        raise ValidationError(f"{where}: expected {rows} rows")
    out = np.empty((rows, cols), dtype=complex)
    for r, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise ValidationError(f"{where}: row {r} must have {cols} entries")
        for c, v in enumerate(row):
            out[r, c] = _scalar(v, f"{where}[{r}][{c}]")
    return out


def parse_blocks(data, algebra, where):
    dims = algebra.block_dims
    if not isinstance(data, list) or len(data) != len(dims):
        raise ValidationError(f"{where}: expected {len(dims)} blocks")
    return [parse_matrix(b, n, n, f"{where}.block{k}") for k, (b, n) in enumerate(zip(data, dims))]


def _algebra(entry, where):
    blocks = entry.get("blocks") if isinstance(entry, dict) else None
    if not isinstance(blocks, list) or not blocks or not all(isinstance(n, int) and n > 0 for n in blocks):
        raise ValidationError(f"{where}.blocks must be a non-empty list of positive integers")
    return BlockAlgebra(tuple(blocks))


def _arm(entry, base, psi, index, tol):
    where = f"arms[{index}]"
    A = _algebra(entry, where)
    emb = entry.get("embedding")
    if isinstance(emb, dict) and "multiplicities" in emb:
        iota = multiplicity_embedding(base, A, emb["multiplicities"])
    elif emb is not None:
        iota = parse_matrix(emb, A.dim, base.dim, f"{where}.embedding")
    else:
        raise ValidationError(f"{where}: missing embedding")
    check_embedding(base, A, iota, tol, index)
    if "x" not in entry:
        raise ValidationError(f"{where}: missing x")
    x = A.element(parse_blocks(entry["x"], A, f"{where}.x"))
    if ("state" in entry) == ("expectation" in entry):
        raise ValidationError(f"{where}: give exactly one of state, expectation")
    if "expectation" in entry:
        E = parse_matrix(entry["expectation"], base.dim, A.dim, f"{where}.expectation")
        return Arm(base, A, iota, E, x)
    state = FaithfulState(A, parse_blocks(entry["state"], A, f"{where}.state"), tol)
    mismatch = float(np.max(np.abs(state.functional() @ iota - psi.functional())))
    if mismatch > tol:
        raise ValidationError(f"{where}: arm state restricted to the base differs from the base state",
                              residual=mismatch)
    return Arm.from_state(base, A, iota, state, x, tol)


def model_from_dict(doc):
    """``(model, params)`` from a parsed document; every arm is validated."""
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    for key in ("base", "arms"):
        if key not in doc:
            raise ValidationError(f"missing top-level key {key!r}")
    params = dict(doc.get("params", {}))
    unknown = set(params) - PARAM_KEYS
    if unknown:
        raise ValidationError(f"unknown params {sorted(unknown)}")
    tol = resolve(params.get("tol"))
    base = _algebra(doc["base"], "base")
    if "density" not in doc["base"]:
        raise ValidationError("base: missing density")
    psi = FaithfulState(base, parse_blocks(doc["base"]["density"], base, "base.density"), tol)
    arms_doc = doc["arms"]
    if not isinstance(arms_doc, list) or not arms_doc:
        raise ValidationError("arms must be a non-empty list")
    arms = [_arm(a, base, psi, i, tol) for i, a in enumerate(arms_doc)]
    n_arms = params.get("n_arms", len(arms))
    if len(arms) == 1:
        arms = arms * n_arms
    elif n_arms != len(arms):
        raise ValidationError(f"params.n_arms is {n_arms} but {len(arms)} arms are listed")
    return AmalgamatedModel(base, psi, arms, tol), params


def parse_model(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError(f"model file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc)


def encode(value):
    """JSON-ready form: complex -> [re, im], arrays -> nested lists."""
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, np.ndarray):
        return encode(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def element_to_json(x):
    return encode([b for b in x.blocks])


def model_to_dict(model, params=None):
    """Inverse of :func:`model_from_dict` (expectations written explicitly)."""
    doc = {
        "base": {"blocks": list(model.base.block_dims), "density": encode(list(model.state.density))},
        "arms": [{"blocks": list(a.algebra.block_dims), "embedding": encode(a.embedding),
                  "expectation": encode(a.expectation), "x": element_to_json(a.x)} for a in model.arms],
    }
    if params:
        doc["params"] = dict(params)
    return doc

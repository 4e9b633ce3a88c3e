"""JSON model files (schema 1).

A file describes either a general network (``nodes`` + ``routing``) or the
RMFS warehouse through an ``rmfs`` parameter block, or both. See
docs/model_schema.md for the field reference.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netmodel import DISCIPLINES, Node, RateFunction, SoqnModel, routing_from_sparse, validate_model
from .rmfs import RmfsParams, build_rmfs_model

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema", "nodes", "routing", "resources", "arrival_rate", "rmfs"}


class ModelFileError(ValueError):
    """Parse or schema problem, with a location prefix such as ``file:3:7`` or ``nodes[2].rate``."""


@dataclass(frozen=True)
class ModelFile:
    model: SoqnModel | None
    rmfs: RmfsParams | None

    def require_model(self) -> SoqnModel:
        if self.model is None:
            raise ModelFileError("file has neither nodes/routing nor an rmfs block with resources")
        return self.model

    def require_rmfs(self) -> RmfsParams:
        if self.rmfs is None:
            raise ModelFileError("this command needs an 'rmfs' parameter block")
        return self.rmfs


def _where(src: str, path: str) -> str:
    return f"{src}: {path}" if path else src


def _rate_from_json(d, where: str) -> RateFunction:
    if isinstance(d, (int, float)):
        return RateFunction.constant(float(d))
    if not isinstance(d, dict) or "kind" not in d:
        raise ModelFileError(f"{where}: rate must be a number or an object with 'kind'")
    try:
        return RateFunction.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: {exc}") from exc


def _routing_from_json(spec, ids: list[str], where: str) -> np.ndarray:
    size = len(ids) + 1
    if isinstance(spec, list):
        r = np.asarray(spec, dtype=float)
        if r.shape != (size, size):
            raise ModelFileError(f"{where}: dense routing must be {size}x{size}, got shape {r.shape}")
        return r
    if isinstance(spec, dict) and "sparse" in spec:
        lookup = {"0": 0, **{name: j for j, name in enumerate(ids, start=1)}}
        triples = []
        for k, entry in enumerate(spec["sparse"]):
            if len(entry) != 3:
                raise ModelFileError(f"{where}.sparse[{k}]: expected [from, to, probability]")
            a, b, p = entry
            try:
                i = a if isinstance(a, int) else lookup[str(a)]
                j = b if isinstance(b, int) else lookup[str(b)]
            except KeyError as exc:
                raise ModelFileError(f"{where}.sparse[{k}]: unknown node {exc.args[0]!r}") from None
            if not (0 <= i < size and 0 <= j < size):
                raise ModelFileError(f"{where}.sparse[{k}]: node index out of range")
            triples.append((i, j, float(p)))
        return routing_from_sparse(size, triples)
    raise ModelFileError(f"{where}: routing must be a dense matrix or {{'sparse': [[i, j, p], ...]}}")


def parse_model_dict(doc: dict, src: str = "<model>") -> ModelFile:
    if not isinstance(doc, dict):
        raise ModelFileError(f"{src}: top level must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelFileError(f"{_where(src, 'schema')}: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ModelFileError(f"{src}: unknown keys {sorted(unknown)}")

    params = None
    if "rmfs" in doc:
        try:
            params = RmfsParams.from_dict(doc["rmfs"])
        except (TypeError, ValueError) as exc:
            raise ModelFileError(f"{_where(src, 'rmfs')}: {exc}") from exc

    model = None
    if "nodes" in doc:
        nodes, ids = [], []
        for k, nd in enumerate(doc["nodes"]):
            where = _where(src, f"nodes[{k}]")
            if not isinstance(nd, dict) or "id" not in nd or "rate" not in nd:
                raise ModelFileError(f"{where}: node needs 'id' and 'rate'")
            disc = nd.get("discipline", DISCIPLINES[0])
            if disc not in DISCIPLINES:
                raise ModelFileError(f"{where}.discipline: must be one of {list(DISCIPLINES)}")
            nodes.append(Node(str(nd["id"]), _rate_from_json(nd["rate"], f"{where}.rate"), disc))
            ids.append(str(nd["id"]))
        if len(set(ids)) != len(ids) or "0" in ids:
            raise ModelFileError(f"{_where(src, 'nodes')}: node ids must be unique and not '0'")
        for key in ("routing", "resources", "arrival_rate"):
            if key not in doc:
                raise ModelFileError(f"{src}: missing '{key}'")
        routing = _routing_from_json(doc["routing"], ids, _where(src, "routing"))
        model = SoqnModel(tuple(nodes), routing, doc["resources"], float(doc["arrival_rate"]))
        model = validate_model(model)
    elif params is not None and "resources" in doc:
        model = build_rmfs_model(params, int(doc["resources"]))
        if "arrival_rate" in doc:
            model = validate_model(model.with_arrival_rate(float(doc["arrival_rate"])))
    return ModelFile(model=model, rmfs=params)


def load_model_file(path) -> ModelFile:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_model_dict(doc, str(path))


def model_to_dict(model: SoqnModel, rmfs: RmfsParams | None = None) -> dict:
    """Inverse of parse_model_dict; floats are written with full precision."""
    doc = {
        "schema": SCHEMA_VERSION,
        "nodes": [
            {"id": nd.name, "discipline": nd.discipline, "rate": nd.rate.to_dict()} for nd in model.nodes
        ],
        "routing": model.routing.tolist(),
        "resources": int(model.resources),
        "arrival_rate": float(model.arrival_rate),
    }
    if rmfs is not None:
        doc["rmfs"] = rmfs.to_dict()
    return doc


def dump_model(model: SoqnModel, path, rmfs: RmfsParams | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, rmfs), indent=2) + "\n", encoding="utf-8")


def format_number(x) -> str:
    """12 significant digits, '.' decimal separator, empty for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return "%.12g" % x

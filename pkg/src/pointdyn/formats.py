"""JSON documents for systems, map families and horseshoe certificates.

Distances are written as ``repr`` strings so a parse/serialize round trip
is bit-exact.  Canonical form is sorted keys with two-space indentation.
"""

from __future__ import annotations

import json
from typing import Union

from .horseshoe import HorseshoeCertificate
from .limits import MapFamily
from .metric import BinaryWords, CircleGrid, ExplicitMatrix, MetricSystem, validate

SCHEMA = 1


class FormatError(ValueError):
    """Malformed or invalid document; ``report`` holds validation violations, if any."""

    def __init__(self, message: str, report=()):
        super().__init__(message)
        self.report = list(report)


def canonical(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()


def _metric_from(spec: dict):
    kind = spec.get("kind")
    if kind == "matrix":
        try:
            return ExplicitMatrix([[float(v) for v in row] for row in spec["data"]])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad matrix data: {exc}") from exc
    if kind == "circle":
        return CircleGrid(int(spec["n"]))
    if kind == "binary_words":
        return BinaryWords(int(spec["k"]))
    raise FormatError(f"unknown metric kind {kind!r}")


def system_to_dict(system: MetricSystem) -> dict:
    doc = {
        "schema": SCHEMA,
        "name": system.name,
        "metric": system.metric.to_spec(),
        "map": [int(v) for v in system.map],
    }
    if system.labels is not None:
        doc["labels"] = list(system.labels)
    return doc


def family_to_dict(family: MapFamily) -> dict:
    doc = system_to_dict(family.limit)
    doc["name"] = family.name or family.limit.name
    doc["family"] = [[int(v) for v in m.map] for m in family.members]
    return doc


def _build_system(metric, fmap, labels, name) -> MetricSystem:
    try:
        system = MetricSystem(metric, fmap, labels, name)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    report = validate(system)
    if report:
        raise FormatError("invalid system: " + "; ".join(str(v) for v in report), report)
    return system


def from_dict(doc: dict) -> Union[MetricSystem, MapFamily]:
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise FormatError(f"unsupported schema {doc.get('schema')!r}")
    for key in ("metric", "map"):
        if key not in doc:
            raise FormatError(f"missing field {key!r}")
    try:
        metric = _metric_from(doc["metric"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad metric block: {exc}") from exc
    labels = doc.get("labels")
    if labels is not None and len(labels) != metric.n:
        raise FormatError(f"labels must have length {metric.n}")
    name = str(doc.get("name", ""))
    limit = _build_system(metric, doc["map"], labels, name)
    if "family" not in doc:
        return limit
    members = []
    for i, fmap in enumerate(doc["family"]):
        try:
            members.append(MetricSystem(metric, fmap, labels, f"{name}_member{i}"))
        except ValueError as exc:
            raise FormatError(f"family member {i}: {exc}") from exc
    if not members:
        raise FormatError("family array is empty")
    return MapFamily(limit, members, name)


def parse(data: Union[bytes, str]) -> Union[MetricSystem, MapFamily]:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    return from_dict(doc)


def serialize(obj: Union[MetricSystem, MapFamily, HorseshoeCertificate]) -> bytes:
    if isinstance(obj, MapFamily):
        return canonical(family_to_dict(obj))
    if isinstance(obj, HorseshoeCertificate):
        return canonical(obj.to_dict())
    return canonical(system_to_dict(obj))


def parse_certificate(data: Union[bytes, str]) -> HorseshoeCertificate:
    try:
        doc = json.loads(data)
        if doc.get("kind") != "horseshoe_certificate":
            raise FormatError("not a horseshoe certificate document")
        return HorseshoeCertificate.from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed certificate: {exc}") from exc


def load(path) -> Union[MetricSystem, MapFamily]:
    with open(path, "rb") as fh:
        return parse(fh.read())


def save(obj, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(obj))

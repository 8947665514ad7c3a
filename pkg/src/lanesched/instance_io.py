"""Versioned JSON instance files.

Connections are zero-based. The controller refers to stages by ``id``.
"""
from __future__ import annotations

import json
from pathlib import Path

from .domain import (CyclePlan, ControllerState, Instance, StageDefinition, ValidationError, Vehicle,
                     build_clusters)

FORMAT_VERSION = 1


class InstanceFormatError(ValidationError):
    pass


def _req(obj, key, where):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"{where}: missing key {key!r}")
    return obj[key]


def _num(obj, key, where, default=None):
    if key not in obj:
        if default is None:
            raise InstanceFormatError(f"{where}: missing key {key!r}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def plan_from_dict(plan_doc: dict, where: str = "plan") -> CyclePlan:
    stages_doc = _req(plan_doc, "stages", where)
    if not isinstance(stages_doc, list):
        raise InstanceFormatError(f"{where}.stages: expected a list")
    stages = []
    for k, s in enumerate(stages_doc):
        w = f"{where}.stages[{k}]"
        conns = _req(s, "connections", w)
        if not isinstance(conns, list) or not all(isinstance(c, int) and not isinstance(c, bool) for c in conns):
            raise InstanceFormatError(f"{w}.connections: expected a list of integers")
        stages.append(StageDefinition(int(_req(s, "id", w)), frozenset(conns), _num(s, "min_green", w),
                                      _num(s, "max_green", w), _num(s, "intergreen", w)))
    M = _req(plan_doc, "num_connections", where)
    return CyclePlan(tuple(stages), int(M), bool(plan_doc.get("cycle_enforced", True)),
                     plan_doc.get("strict_traversal"))


def plan_to_dict(plan: CyclePlan) -> dict:
    doc = {
        "num_connections": plan.num_connections,
        "cycle_enforced": plan.cycle_enforced,
        "stages": [{"id": s.id, "connections": sorted(s.connections), "min_green": s.min_green,
                    "max_green": s.max_green, "intergreen": s.intergreen} for s in plan.stages],
    }
    if plan.strict_traversal is not None:
        doc["strict_traversal"] = plan.strict_traversal
    return doc


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level: expected an object")
    version = _req(doc, "format_version", "top level")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    plan = plan_from_dict(_req(doc, "plan", "top level"))
    stages = plan.stages
    ctrl_doc = doc.get("controller", {})
    stage_id = ctrl_doc.get("current_stage", stages[0].id if stages else 0)
    controller = ControllerState(plan.position(stage_id), int(ctrl_doc.get("current_connection", 0)),
                                 _num(ctrl_doc, "stage_start", "controller", 0.0),
                                 _num(ctrl_doc, "elapsed", "controller", 0.0),
                                 tuple(int(q) for q in ctrl_doc.get("queues", ())))
    vehicles = []
    for k, v in enumerate(_req(doc, "vehicles", "top level")):
        where = f"vehicles[{k}]"
        try:
            vehicles.append(Vehicle(int(_req(v, "connection", where)), _num(v, "arr", where),
                                    _num(v, "dep", where), _num(v, "weight", where, 1.0),
                                    bool(v.get("queued", False))))
        except ValidationError as e:
            raise InstanceFormatError(f"{where}: {e}") from None
    gap = _num(doc, "separation_gap", "top level", 1.0)
    cap = _num(doc, "cluster_cap", "top level", 10.0)
    seqs = build_clusters(vehicles, gap, cap, plan.num_connections)
    return Instance(plan, tuple(seqs), controller, _num(doc, "horizon", "top level"), gap, cap)


def instance_to_dict(inst: Instance) -> dict:
    plan = inst.plan
    c = inst.controller
    vehicles = []
    for seq in inst.sequences:
        for v in seq.vehicles:
            d = {"connection": v.connection, "arr": v.arr, "dep": v.dep, "weight": v.weight}
            if v.queued:
                d["queued"] = True
            vehicles.append(d)
    return {
        "format_version": FORMAT_VERSION,
        "horizon": inst.horizon,
        "separation_gap": inst.separation_gap,
        "cluster_cap": inst.cluster_cap,
        "plan": plan_to_dict(plan),
        "controller": {
            "current_stage": plan.stages[c.current_stage].id,
            "current_connection": c.current_connection,
            "stage_start": c.stage_start,
            "elapsed": c.elapsed,
            "queues": list(c.queues),
        },
        "vehicles": vehicles,
    }


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return instance_from_dict(doc)


def parse_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))

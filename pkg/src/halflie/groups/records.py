"""JSON-compatible records for group points and control paths.

Record layout::

    {"model": {"variant": "matrix", "n": 3}, "data": [...flattened...]}
    {"model": {...}, "interpolation": "constant", "samples": [[...], ...]}

Supported model records: ``matrix`` (n), ``semidirect`` (n, rotation or
trivial representation), ``fourier`` (N), ``heisenberg`` (perturbed flag).
"""
from __future__ import annotations

import numpy as np

from .base import ControlPath, GroupPoint
from .diffeo import FourierDiffeo
from .extension import ExtensionGroup, heisenberg
from .matrix import MatrixGroup
from .semidirect import SemidirectProduct


def model_to_record(model) -> dict:
    if isinstance(model, MatrixGroup):
        return {"variant": "matrix", "n": model.n}
    if isinstance(model, SemidirectProduct) and isinstance(model.base, MatrixGroup):
        return {"variant": "semidirect", "n": model.base.n, "fiber_dim": model.fiber_dim,
                "representation": model.rep_name}
    if isinstance(model, FourierDiffeo):
        return {"variant": "fourier", "N": model.N}
    if isinstance(model, ExtensionGroup) and model.datum.name.startswith("heisenberg"):
        return {"variant": "heisenberg", "perturbed": model.datum.name.endswith("perturbed")}
    raise ValueError(f"no record format for {model!r}")


def model_from_record(rec: dict):
    v = rec.get("variant")
    if v == "matrix":
        return MatrixGroup(int(rec["n"]))
    if v == "semidirect":
        rep = rec.get("representation", "rotation")
        if rep == "rotation":
            return SemidirectProduct.rotation(int(rec["n"]))
        if rep == "trivial":
            return SemidirectProduct.trivial(MatrixGroup(int(rec["n"])), int(rec["fiber_dim"]))
        raise ValueError(f"unknown representation {rep!r}")
    if v == "fourier":
        return FourierDiffeo(int(rec["N"] if "N" in rec else rec["n"]))
    if v == "heisenberg":
        return heisenberg(bool(rec.get("perturbed", False)))
    raise ValueError(f"unknown model variant {v!r}")


def point_to_record(p: GroupPoint) -> dict:
    return {"model": model_to_record(p.model), "data": p.model._flatten(p.data).tolist()}


def point_from_record(rec: dict, model=None) -> GroupPoint:
    model = model or model_from_record(rec["model"])
    return GroupPoint(model, model._unflatten(np.asarray(rec["data"], float)))


def control_to_record(path: ControlPath) -> dict:
    return {"model": model_to_record(path.model), "interpolation": path.interpolation,
            "samples": path.samples.tolist()}


def control_from_record(rec: dict, model=None) -> ControlPath:
    model = model or model_from_record(rec["model"])
    return ControlPath(model, np.asarray(rec["samples"], float),
                       rec.get("interpolation", "constant"))

"""Binary containers for grid functions, frames and DFD systems.

Every container is a numpy ``.npz`` archive with a ``meta`` entry holding a
JSON document (``format``, ``version``, grid and bookkeeping). Frames are
stored as per-block generator spectra plus their translation counts and
labels, which determine every element spectrum exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dfd import DfdSystem, MultiplierOperator
from .frames import Block, Frame
from .grid import Grid, GridFunction

VERSION = 1


class ContainerError(ValueError):
    pass


def _meta_array(meta: dict) -> np.ndarray:
    return np.frombuffer(json.dumps(meta, sort_keys=True, default=float).encode(), dtype=np.uint8)


def _read(path, fmt: str):
    with np.load(path, allow_pickle=False) as z:
        data = {k: z[k] for k in z.files}
    if "meta" not in data:
        raise ContainerError(f"{path}: missing meta entry")
    meta = json.loads(data.pop("meta").tobytes().decode())
    if meta.get("format") != fmt:
        raise ContainerError(f"{path}: expected a {fmt} container, found {meta.get('format')!r}")
    if meta.get("version", 0) > VERSION:
        raise ContainerError(f"{path}: container version {meta['version']} is newer than {VERSION}")
    return meta, data


def _write(path, meta: dict, arrays: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, meta=_meta_array({**meta, "version": VERSION}), **arrays)
    return path


def container_format(path) -> str:
    with np.load(path, allow_pickle=False) as z:
        return json.loads(z["meta"].tobytes().decode()).get("format", "")


# grid functions -------------------------------------------------------------

def save_gridfunction(path, x: GridFunction, **extra):
    meta = {"format": "gridfunction", "n": x.grid.n, "L": x.grid.L, "extra": extra}
    return _write(path, meta, {"samples": x.samples})


def load_gridfunction(path) -> tuple[GridFunction, dict]:
    meta, data = _read(path, "gridfunction")
    grid = Grid(int(meta["n"]), float(meta["L"]))
    return GridFunction(data["samples"], grid), meta.get("extra", {})


# frames ---------------------------------------------------------------------

def _frame_entries(frame: Frame, prefix: str):
    arrays = {f"{prefix}support": frame.support}
    blocks = []
    for i, b in enumerate(frame.blocks):
        arrays[f"{prefix}gen{i}"] = b.generators
        arrays[f"{prefix}lab{i}"] = b.labels
        blocks.append({"shifts": int(b.shifts)})
    meta = {
        "blocks": blocks, "bound_lower": frame.bound_lower, "bound_upper": frame.bound_upper,
        "tight_constant": frame.tight_constant, "minimal_flag": frame.minimal_flag,
        "truncation": frame.truncation,
    }
    return meta, arrays


def _frame_from(grid: Grid, meta: dict, data: dict, prefix: str) -> Frame:
    blocks = tuple(
        Block(data[f"{prefix}gen{i}"], int(b["shifts"]), data[f"{prefix}lab{i}"])
        for i, b in enumerate(meta["blocks"]))
    return Frame(grid, blocks, data[f"{prefix}support"], bound_lower=meta["bound_lower"],
                 bound_upper=meta["bound_upper"], tight_constant=meta["tight_constant"],
                 minimal_flag=meta["minimal_flag"], truncation=meta["truncation"])


def save_frame(path, frame: Frame):
    fmeta, arrays = _frame_entries(frame, "u_")
    meta = {"format": "frame", "n": frame.grid.n, "L": frame.grid.L, "labels": len(frame),
            "frame": fmeta}
    return _write(path, meta, arrays)


def load_frame(path) -> Frame:
    meta, data = _read(path, "frame")
    grid = Grid(int(meta["n"]), float(meta["L"]))
    return _frame_from(grid, meta["frame"], data, "u_")


# DFD systems ----------------------------------------------------------------

def save_system(path, sys: DfdSystem):
    """Store u, v, kappa and enough to rebuild the forward operator."""
    umeta, ua = _frame_entries(sys.u, "u_")
    vmeta, va = _frame_entries(sys.v, "v_")
    arrays = {**ua, **va, "kappa": sys.kappa}
    op = sys.operator
    opmeta = None
    if op is not None:
        if hasattr(op, "gamma") and hasattr(op, "T"):
            opmeta = {"type": "heat", "gamma": op.gamma, "T": op.T}
        elif isinstance(op, MultiplierOperator):
            opmeta = {"type": "multiplier"}
            arrays.update(op_multiplier=op.multiplier, op_domain=op.domain_mask,
                          op_range=op.range_mask)
        else:
            raise ContainerError(f"cannot serialize operator of type {type(op).__name__}")
    meta = {"format": "dfd", "n": sys.grid.n, "L": sys.grid.L, "kind": sys.kind,
            "params": sys.params, "labels": len(sys.kappa), "u": umeta, "v": vmeta,
            "operator": opmeta}
    return _write(path, meta, arrays)


def load_system(path) -> DfdSystem:
    from .heat import HeatOperator

    meta, data = _read(path, "dfd")
    grid = Grid(int(meta["n"]), float(meta["L"]))
    u = _frame_from(grid, meta["u"], data, "u_")
    v = _frame_from(grid, meta["v"], data, "v_")
    op = None
    om = meta.get("operator")
    if om and om["type"] == "heat":
        op = HeatOperator(om["gamma"], om["T"], grid)
    elif om and om["type"] == "multiplier":
        op = MultiplierOperator(grid, data["op_multiplier"], data["op_domain"], data["op_range"])
    return DfdSystem(u, v, data["kappa"], op, kind=meta["kind"], params=meta["params"])

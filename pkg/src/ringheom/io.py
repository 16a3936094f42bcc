"""CSV emission, stack checkpoints and run manifests."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cl import CLField, CLGrid, CLStack
from .grid import RingGrid, WignerField, make_grid, read_field_csv, write_field_csv
from .hierarchy import HierarchySpace
from .risb import ADOStack

__all__ = ["write_csv", "read_csv", "save_stack", "load_stack", "write_manifest"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Write rows under a header; floats keep full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Return ``(header, float array)`` of a file written by :func:`write_csv`."""
    with Path(path).open() as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(x) for x in row] for row in r]
    return header, np.array(data).reshape(-1, len(header))


def _write_cl_field(path, W: CLField):
    rows = ((i, j, W.values[i, j]) for i in range(W.grid.n_p)
            for j in range(W.grid.n_theta))
    write_csv(path, ["p_index", "theta_index", "value"], rows)


def _read_cl_field(path, grid: CLGrid) -> CLField:
    _, data = read_csv(path)
    values = np.zeros(grid.shape)
    values[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
    return CLField(values, grid)


def save_stack(directory, stack, metadata: dict | None = None) -> Path:
    """Checkpoint a hierarchy stack as one CSV per member plus a manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if isinstance(stack, ADOStack):
        model = "risb"
        for j in range(len(stack.space)):
            write_field_csv(d / f"member_{j:06d}.csv", WignerField(stack.values[j], stack.grid))
    elif isinstance(stack, CLStack):
        model = "cl"
        for j in range(len(stack.space)):
            _write_cl_field(d / f"member_{j:06d}.csv", CLField(stack.values[j], stack.grid))
    else:
        raise TypeError(f"cannot checkpoint {type(stack).__name__}")
    manifest = {
        "model": model,
        "grid": stack.grid.to_dict(),
        "n_slots": stack.space.n_slots,
        "N_trunc": stack.space.depth,
        "indices": stack.space.indices.tolist(),
        "metadata": metadata or {},
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return d


def load_stack(directory):
    d = Path(directory)
    man = json.loads((d / "manifest.json").read_text())
    space = HierarchySpace(man["n_slots"], man["N_trunc"])
    if space.indices.tolist() != man["indices"]:
        raise ValueError("checkpoint hierarchy ordering does not match")
    files = [d / f"member_{j:06d}.csv" for j in range(len(space))]
    if man["model"] == "risb":
        grid = make_grid(**man["grid"])
        values = np.stack([read_field_csv(f).values for f in files])
        return ADOStack(values, grid, space), man["metadata"]
    if man["model"] == "cl":
        grid = CLGrid(**man["grid"])
        values = np.stack([_read_cl_field(f, grid).values for f in files])
        return CLStack(values, grid, space), man["metadata"]
    raise ValueError(f"unknown model tag {man['model']!r}")


def write_manifest(directory, payload: dict) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o).__name__)

"""Text checkpoint format.

Layout (UTF-8, ``\\n`` line endings)::

    ATPL-CKPT v1
    @meta <json object>              # optional, at most one, before params
    <name> <rank> <dim_1> [<dim_2>]
    <v_1> <v_2> ... <v_n>            # row-major, float.hex() encoding
    ...                              # one two-line record per parameter

Values are written with ``float.hex`` so a load/save cycle is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import IngestionError
from .params import ParamStore

HEADER = "ATPL-CKPT v1"


def save_checkpoint(path: str | Path, params: ParamStore, meta: dict | None = None) -> None:
    lines = [HEADER]
    if meta is not None:
        lines.append("@meta " + json.dumps(meta, sort_keys=True))
    for name, p in params.items():
        if " " in name:
            raise ValueError(f"parameter names may not contain spaces: {name!r}")
        dims = " ".join(str(d) for d in p.data.shape)
        lines.append(f"{name} {p.data.ndim} {dims}")
        lines.append(" ".join(float(v).hex() for v in p.data.reshape(-1)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Return ``(name -> array, meta)``."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != HEADER:
        raise IngestionError(f"{path}: missing '{HEADER}' header")
    meta: dict = {}
    values: dict[str, np.ndarray] = {}
    i = 1
    if i < len(text) and text[i].startswith("@meta "):
        meta = json.loads(text[i][len("@meta "):])
        i += 1
    while i < len(text):
        if not text[i].strip():
            i += 1
            continue
        head = text[i].split()
        try:
            name, rank = head[0], int(head[1])
            dims = tuple(int(d) for d in head[2:2 + rank])
            if len(dims) != rank:
                raise ValueError("rank/dims disagree")
            raw = text[i + 1].split() if i + 1 < len(text) else []
            arr = np.array([float.fromhex(v) for v in raw], dtype=np.float64)
            values[name] = arr.reshape(dims)
        except (ValueError, IndexError) as exc:
            raise IngestionError(f"{path}: bad record at line {i + 1}: {exc}") from None
        i += 2
    return values, meta

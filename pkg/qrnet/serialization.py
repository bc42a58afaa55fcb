# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""draccus encoders/decoders for the numeric types, and JSON artifact helpers.

Importing this module registers:

* `numpy.ndarray` <-> nested lists of floats (Python's float repr round-trips exactly through JSON);
* numpy scalars -> Python scalars;
* `ControlBounds` <-> `{"u_min": [...], "u_max": [...]}` with `null` for an unbounded side.
"""
import os
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type, TypeVar, Union

import draccus
import numpy as np
from draccus.cfgparsing import load_config

from qrnet.models.base import ControlBounds
from qrnet.utils import ConfigError

logger = getLogger(__name__)

T = TypeVar("T")


@draccus.encode.register(np.ndarray)
def encode_ndarray(obj: np.ndarray, declared_type: Optional[Type] = None) -> list:
    return np.asarray(obj, dtype=float).tolist()


@draccus.decode.register(np.ndarray)
def decode_ndarray(raw_value: Any, path: Sequence[str] = ()) -> np.ndarray:
    return np.asarray(raw_value, dtype=float)


draccus.encode.register(np.generic, lambda x, _=None: x.item(), include_subclasses=True)


def _encode_side(values: np.ndarray) -> List[Optional[float]]:
    return [None if not np.isfinite(v) else float(v) for v in values]


@draccus.encode.register(ControlBounds)
def encode_bounds(obj: ControlBounds, declared_type: Optional[Type] = None) -> Dict[str, list]:
    return {"u_min": _encode_side(obj.u_min), "u_max": _encode_side(obj.u_max)}


@draccus.decode.register(ControlBounds)
def decode_bounds(raw_value: Any, path: Sequence[str] = ()) -> ControlBounds:
    if not isinstance(raw_value, dict) or set(raw_value) != {"u_min", "u_max"}:
        raise draccus.ParsingError(f"bounds at {'.'.join(path) or '<root>'} need exactly u_min and u_max")
    u_min = [-np.inf if v is None else float(v) for v in raw_value["u_min"]]
    u_max = [np.inf if v is None else float(v) for v in raw_value["u_max"]]
    return ControlBounds(np.array(u_min), np.array(u_max))


def dump_json(obj: Any, path: Union[str, os.PathLike]) -> Path:
    """Encodes `obj` with draccus and writes it as indented JSON, replacing `path` atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with draccus.config_type("json"), open(tmp, "w", encoding="utf-8") as f:
        draccus.dump(obj, f, indent=2)
        f.write("\n")
    os.replace(tmp, path)
    return path


def load_json(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        return load_config(f, file=str(path))


def load_json_as(cls: Type[T], path: Union[str, os.PathLike]) -> T:
    return draccus.decode(cls, load_json(path))

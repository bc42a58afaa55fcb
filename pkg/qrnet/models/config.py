# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Model configurations.

A model config is a file like

```yaml
model: burgers
n: 16
nu: 0.2
```

The `model` key selects the registered `ModelConfig` subclass (it plays the role of draccus' `type` key). An optional
`overrides` entry names a second file whose values are deep-merged on top before decoding.
"""
import os
from dataclasses import dataclass
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, Optional, Union

import draccus
import mergedeep
from draccus import CHOICE_TYPE_KEY
from draccus.cfgparsing import load_config

from qrnet.utils import ConfigError

logger = getLogger(__name__)

MODEL_KEY = "model"
OVERRIDES_KEY = "overrides"


@dataclass
class ModelConfig(draccus.ChoiceRegistry):
    def build(self):
        """Instantiates the `DynamicsModel` this config describes."""
        raise NotImplementedError

    def resolve_paths(self, base_dir: Path) -> None:
        """Makes file references relative to the directory of the config file that named them."""


def read_config_dict(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        raw = load_config(f, file=str(path))
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping, got {type(raw).__name__}")
    return raw


def model_config_from_dict(raw: Dict[str, Any]) -> ModelConfig:
    raw = dict(raw)
    if MODEL_KEY in raw:
        raw[CHOICE_TYPE_KEY] = raw.pop(MODEL_KEY)
    if CHOICE_TYPE_KEY not in raw:
        raise ConfigError(f"model config needs a '{MODEL_KEY}' key, one of {sorted(ModelConfig.get_known_choices())}")
    return draccus.decode(ModelConfig, raw)


def model_config_to_dict(config: ModelConfig) -> Dict[str, Any]:
    encoded = draccus.encode(config, ModelConfig)
    encoded[MODEL_KEY] = encoded.pop(CHOICE_TYPE_KEY)
    return encoded


def load_model_config(
    path: Union[str, os.PathLike], overrides: Optional[Dict[str, Any]] = None
) -> ModelConfig:
    """Reads a model config file, applying its `overrides` file and then `overrides`, in that order."""
    path = Path(path)
    raw = read_config_dict(path)
    layered = raw.pop(OVERRIDES_KEY, None)
    if layered is not None:
        layered_path = Path(layered)
        if not layered_path.is_absolute():
            layered_path = path.parent / layered_path
        logger.info(f"Merging overrides from {layered_path}")
        mergedeep.merge(raw, read_config_dict(layered_path))
    if overrides:
        mergedeep.merge(raw, overrides)
    config = model_config_from_dict(raw)
    config.resolve_paths(path.parent)
    return config

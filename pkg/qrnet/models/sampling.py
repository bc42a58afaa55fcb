# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Initial-condition domains.

Domains are draccus choice types so experiment files can pick one by name:

```yaml
domain:
  type: sphere
  radius: 1.2
```
"""
from dataclasses import dataclass
from logging import getLogger
from typing import List, Optional

import draccus
import numpy as np

from qrnet.utils import ConfigError, DimensionError

logger = getLogger(__name__)


@dataclass
class SamplingDomain(draccus.ChoiceRegistry):
    def draw(self, rng: np.random.Generator, count: int, model) -> np.ndarray:
        """Returns `count` full states, shape (count, model.n_states)."""
        raise NotImplementedError

    def validate(self) -> None:
        pass


@SamplingDomain.register_subclass("sphere")
@dataclass
class SphereDomain(SamplingDomain):
    """Isotropic Gaussian directions rescaled to `radius` about the goal state."""

    radius: float = 1.2

    def validate(self) -> None:
        if self.radius <= 0:
            raise ConfigError(f"sphere radius must be positive, got {self.radius}")

    def draw(self, rng, count, model):
        directions = rng.standard_normal((count, model.n_states))
        return _rescale(directions, self.radius, model.equilibrium.x_f)


@SamplingDomain.register_subclass("sine")
@dataclass
class SineSeriesDomain(SamplingDomain):
    """Random sine series `sum_k a_k / k sin(k pi (xi + 1) / 2)`, `a_k ~ N(0, 1)`, on the collocation nodes.

    Every term vanishes at `xi = +-1`, so draws honor the Dirichlet data. Each draw is rescaled to `radius`.
    """

    radius: float = 1.2
    modes: int = 10

    def validate(self) -> None:
        if self.radius <= 0 or self.modes < 1:
            raise ConfigError(f"sine domain needs radius > 0 and modes >= 1, got {self.radius}, {self.modes}")

    def draw(self, rng, count, model):
        nodes = getattr(model, "xi", None)
        if nodes is None:
            raise ConfigError(f"sine domain needs a collocation model, got {type(model).__name__}")
        k = np.arange(1, self.modes + 1)
        basis = np.sin(np.pi * np.outer(nodes + 1.0, k) / 2.0) / k
        coefficients = rng.standard_normal((count, self.modes))
        return _rescale(coefficients @ basis.T, self.radius, model.equilibrium.x_f)


@SamplingDomain.register_subclass("box")
@dataclass
class BoxDomain(SamplingDomain):
    """Uniform draws from `x_f +- half_width` per coordinate."""

    half_width: float = 1.0
    half_widths: Optional[List[float]] = None

    def validate(self) -> None:
        widths = self.half_widths if self.half_widths is not None else [self.half_width]
        if any(w < 0 for w in widths):
            raise ConfigError(f"box half widths must be non-negative, got {widths}")

    def draw(self, rng, count, model):
        n = model.n_states
        widths = np.full(n, self.half_width) if self.half_widths is None else np.asarray(self.half_widths, float)
        if widths.shape != (n,):
            raise DimensionError(f"box domain has {widths.shape[0]} half widths, model has {n} states")
        return model.equilibrium.x_f + rng.uniform(-widths, widths, size=(count, n))


def _rescale(offsets: np.ndarray, radius: float, center: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(offsets, axis=-1, keepdims=True)
    # zero draws stay at the center
    norms[norms == 0.0] = 1.0
    return center + radius * offsets / norms


def sample_initial_conditions(domain: SamplingDomain, count: int, seed: int, model) -> np.ndarray:
    """Draws `count` initial states; identical `(domain, count, seed)` give identical draws."""
    if count < 0:
        raise ConfigError(f"count must be non-negative, got {count}")
    domain.validate()
    rng = np.random.default_rng(seed)
    if count == 0:
        return np.zeros((0, model.n_states))
    states = np.asarray(domain.draw(rng, count, model), dtype=float)
    logger.debug(f"Drew {count} initial conditions from {type(domain).__name__} with seed {seed}")
    return model.project(states)

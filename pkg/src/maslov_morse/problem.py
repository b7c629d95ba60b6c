"""Problem definition: potential, two boundary pairs, numeric settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np

from .boundary import (BKDecomposition, BottomShelfData, BoundaryPair, Side, TargetData, bk_decompose,
                       bottom_shelf, normalize_pair, target_data, validate_pair)
from .kernels import DEFAULT_TOL, ToleranceSettings
from .shooting import Potential


@dataclass(frozen=True)
class Settings:
    steps: int = 2000
    s0: float = 0.05
    lambda_inf: float | None = None
    cushion: float = 4.0
    samples: int = 400
    mesh: int = 2000
    tolerances: ToleranceSettings = field(default_factory=lambda: DEFAULT_TOL)

    def __post_init__(self):
        if self.steps < 16:
            raise ValueError("steps must be at least 16")
        if not 0.0 < self.s0 < 1.0:
            raise ValueError("s0 must lie in (0, 1)")
        if self.lambda_inf is not None and self.lambda_inf <= 0:
            raise ValueError("lambda_inf must be positive")
        if self.samples < 2:
            raise ValueError("samples must be at least 2")
        if self.mesh < 64:
            raise ValueError("mesh must be at least 64")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("tolerances")
        return d

    def with_(self, **kw) -> "Settings":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass(frozen=True)
class Problem:
    potential: Potential
    left: BoundaryPair
    right: BoundaryPair
    settings: Settings = field(default_factory=Settings)
    name: str = "problem"

    @classmethod
    def build(cls, potential: Potential, alpha1, alpha2, beta1, beta2,
              settings: Settings | None = None, name: str = "problem") -> "Problem":
        """Validate and normalize both pairs."""
        left = normalize_pair(validate_pair(alpha1, alpha2, Side.LEFT))
        right = normalize_pair(validate_pair(beta1, beta2, Side.RIGHT))
        if left.n != potential.n or right.n != potential.n:
            raise ValueError(f"boundary matrices are {left.n}x{left.n} but the potential is {potential.n}x{potential.n}")
        return cls(potential, left, right, settings or Settings(), name)

    @property
    def n(self) -> int:
        return self.potential.n

    def with_settings(self, **kw) -> "Problem":
        return replace(self, settings=self.settings.with_(**kw))

    def with_potential(self, potential: Potential, name: str | None = None) -> "Problem":
        return replace(self, potential=potential, name=name or self.name)

    @cached_property
    def dec0(self) -> BKDecomposition:
        return bk_decompose(self.left)

    @cached_property
    def dec1(self) -> BKDecomposition:
        return bk_decompose(self.right)

    @cached_property
    def target(self) -> TargetData:
        return target_data(self.right)

    @cached_property
    def shelf(self) -> BottomShelfData:
        return bottom_shelf(self.dec0, self.dec1, self.potential(0.0))

    def v0(self) -> np.ndarray:
        return self.potential(0.0)

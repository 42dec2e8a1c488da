"""Band functions: the geodesic weight ``F`` and the bump ``W~`` attached to a value band [alpha, beta]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BandConfig:
    """Parameters of one connectedness functional.

    ``F`` vanishes on ``[alpha, beta]`` and grows quadratically outside; ``W~`` is a
    quartic bump supported on ``(alpha, beta)``. Unless given explicitly,

    * ``c1`` makes ``F(lower_well) == normalization`` (0 if that value is not below ``alpha``),
    * ``c2`` makes ``F(upper_well) == normalization`` (0 if that value is not above ``beta``),
    * ``c3`` makes ``W~`` integrate to 1.

    The wells default to -1 and +1; the segmentation model, whose wells are 0
    and 1, anchors ``c1`` at 0 instead.

    The penalty enters the total energy with weight ``amplitude * eps ** -exponent``.
    """

    alpha: float
    beta: float
    eps: float = 0.01
    amplitude: float = 1.0
    exponent: int = 0
    normalization: float = 1.0
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    lower_well: float = -1.0
    upper_well: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)) or not self.alpha < self.beta:
            raise ValueError(f"band requires alpha < beta, got alpha={self.alpha}, beta={self.beta}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if self.exponent not in (0, 1):
            raise ValueError(f"exponent must be 0 or 1, got {self.exponent}")
        if self.c1 is None:
            low = self.lower_well
            c1 = self.normalization / (low - self.alpha) ** 2 if self.alpha > low else 0.0
            object.__setattr__(self, "c1", c1)
        if self.c2 is None:
            high = self.upper_well
            c2 = self.normalization / (self.beta - high) ** 2 if self.beta < high else 0.0
            object.__setattr__(self, "c2", c2)
        if self.c3 is None:
            object.__setattr__(self, "c3", 30.0 / (self.beta - self.alpha) ** 5)

    @property
    def prefactor(self) -> float:
        """Weight of this functional in the total energy."""
        if self.amplitude == 0.0:
            return 0.0
        return self.amplitude * self.eps ** (-self.exponent)

    def F(self, s):
        return band_profile(s, self)[0]

    def W(self, s):
        return band_profile(s, self)[2]


def band_profile(s, cfg: BandConfig):
    """Evaluate ``(F, F', W~, W~')`` at ``s`` (scalar or array)."""
    s = np.asarray(s, dtype=float)
    a, b = cfg.alpha, cfg.beta
    below = s < a
    above = s > b
    inside = ~below & ~above

    F = np.where(below, cfg.c1 * (s - a) ** 2, np.where(above, cfg.c2 * (b - s) ** 2, 0.0))
    dF = np.where(below, 2.0 * cfg.c1 * (s - a), np.where(above, 2.0 * cfg.c2 * (s - b), 0.0))
    x, y = s - a, b - s
    Wt = np.where(inside, cfg.c3 * x * x * y * y, 0.0)
    dWt = np.where(inside, 2.0 * cfg.c3 * x * y * (y - x), 0.0)
    if s.ndim == 0:
        return float(F), float(dF), float(Wt), float(dWt)
    return F, dF, Wt, dWt

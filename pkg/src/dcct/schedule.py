"""Mirrored triangular parameter schedules for the two clusterings."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .errors import ConfigError

Kind = Literal["dbscan_eps", "infomap_psi", "kmeans_k"]
KINDS = ("dbscan_eps", "infomap_psi", "kmeans_k")


@dataclass(frozen=True)
class ScheduleSpec:
    base: float
    delta: float
    total_epochs: int
    kind: Kind = "dbscan_eps"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}")
        if self.total_epochs < 2:
            raise ConfigError("total_epochs", "must be >= 2")
        if not self.delta >= 0:
            raise ConfigError("delta", "must be >= 0")
        if self.kind == "kmeans_k":
            if self.base - self.delta < 1:
                raise ConfigError("delta", "base - delta must be >= 1 for kmeans_k")
        elif not self.base - self.delta > 0:
            raise ConfigError("delta", "base - delta must be > 0")


def _floor_float(x: Fraction) -> float:
    """Largest float not above ``x``."""
    f = float(x)
    return math.nextafter(f, -math.inf) if Fraction(f) > x else f


def offset(spec: ScheduleSpec, i: int) -> float:
    """Distance of the rising schedule from base at epoch ``i`` (triangle, peak delta)."""
    e, d = spec.total_epochs, spec.delta
    if i < e / 2:
        return 2 * d * i / e
    return 2 * d * (e - i) / e


def params_at(spec: ScheduleSpec, i: int):
    """``(p1, p2)`` at epoch ``i``: p1 rises then falls above base, p2 mirrors it below.

    Real kinds satisfy ``p1 + p2 == 2*base`` exactly in floating point: p2 is
    formed as ``2*base - p1``, which is exact while ``p1`` stays in
    ``[base, 2*base]``, and p1 is nudged by at most one ulp so both values also
    stay inside their ranges. ``kmeans_k`` rounds both up to integers.
    """
    if not 0 <= i <= spec.total_epochs:
        raise ValueError(f"epoch {i} outside [0, {spec.total_epochs}]")
    b, d = float(spec.base), float(spec.delta)
    t = min(max(offset(spec, i), 0.0), d)
    p1 = min(max(b + t, b), b + d)
    p1 = min(p1, _floor_float(2 * Fraction(b) - Fraction(b - d)))
    p2 = 2 * b - p1
    if spec.kind == "kmeans_k":
        return _ceil(p1), _ceil(p2)
    return p1, p2


def _ceil(x: float) -> int:
    # Absorb float noise such as 400.00000000000006 before rounding up.
    return int(math.ceil(round(x, 9)))


def constant(spec: ScheduleSpec, i: int):
    """Both clusterings at base (dual clustering without dynamic parameters)."""
    if not 0 <= i <= spec.total_epochs:
        raise ValueError(f"epoch {i} outside [0, {spec.total_epochs}]")
    if spec.kind == "kmeans_k":
        return _ceil(spec.base), _ceil(spec.base)
    return float(spec.base), float(spec.base)

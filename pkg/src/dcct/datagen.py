"""Synthetic re-ID-like data: identities on the unit sphere seen through
per-camera linear distortions plus isotropic noise."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Identity:
    id: int
    center: np.ndarray


class SampleView(NamedTuple):
    """What the training loop is allowed to see."""

    index: int
    input: np.ndarray
    camera: int


@dataclass(frozen=True)
class Sample:
    index: int
    input: np.ndarray
    identity: int
    camera: int

    def view(self) -> SampleView:
        return SampleView(self.index, self.input, self.camera)


@dataclass(frozen=True)
class DatasetSpec:
    n_identities: int = 64
    samples_per_identity: int = 16
    d_in: int = 16
    n_cameras: int = 4
    intra_noise_sigma: float = 0.14
    confusable_fraction: float = 0.2
    confusable_gap: float = 0.3
    camera_distortion_scale: float = 0.3
    seed: int = 0

    @property
    def size(self) -> int:
        return self.n_identities * self.samples_per_identity

    def validate(self) -> None:
        if self.n_identities < 1:
            raise ConfigError("n_identities", "must be >= 1")
        if self.samples_per_identity < 2:
            raise ConfigError("samples_per_identity", "must be >= 2 so every identity spans 2 cameras")
        if self.d_in < 2:
            raise ConfigError("d_in", "must be >= 2")
        if self.n_cameras < 2:
            raise ConfigError("n_cameras", "must be >= 2")
        if not self.intra_noise_sigma >= 0:
            raise ConfigError("intra_noise_sigma", "must be >= 0")
        if not 0 <= self.confusable_fraction <= 1:
            raise ConfigError("confusable_fraction", "must lie in [0, 1]")
        if not 0 < self.confusable_gap <= 2:
            raise ConfigError("confusable_gap", "must lie in (0, 2] (chord length on the unit sphere)")
        if not self.camera_distortion_scale >= 0:
            raise ConfigError("camera_distortion_scale", "must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        known = {f.name: f.type for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(f"data.{key}", "unknown field")
        return cls(**d)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def confusable_pairs(spec: DatasetSpec) -> list[tuple[int, int]]:
    """Disjoint identity pairs (2j, 2j+1) covering ``confusable_fraction`` of identities."""
    n_pairs = int(math.floor(spec.confusable_fraction * spec.n_identities / 2))
    return [(2 * j, 2 * j + 1) for j in range(n_pairs)]


def camera_maps(spec: DatasetSpec, rng: np.random.Generator) -> np.ndarray:
    d = spec.d_in
    noise = rng.standard_normal((spec.n_cameras, d, d)) / math.sqrt(d)
    return np.eye(d)[None] + spec.camera_distortion_scale * noise


def generate(spec: DatasetSpec) -> tuple[list[Sample], list[Identity]]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    d = spec.d_in
    centers = _unit(rng.standard_normal((spec.n_identities, d)))

    # Rotate the partner by the angle whose chord equals the gap.
    theta = 2.0 * math.asin(spec.confusable_gap / 2.0)
    for a, b in confusable_pairs(spec):
        u = rng.standard_normal(d)
        u -= (u @ centers[a]) * centers[a]
        u /= np.linalg.norm(u)
        centers[b] = math.cos(theta) * centers[a] + math.sin(theta) * u
    centers = _unit(centers)

    maps = camera_maps(spec, rng)
    offsets = rng.integers(0, spec.n_cameras, size=spec.n_identities)
    noise = rng.standard_normal((spec.size, d))

    samples: list[Sample] = []
    for pid in range(spec.n_identities):
        for j in range(spec.samples_per_identity):
            idx = pid * spec.samples_per_identity + j
            cam = int((offsets[pid] + j) % spec.n_cameras)
            x = maps[cam] @ centers[pid] + spec.intra_noise_sigma * noise[idx]
            samples.append(Sample(idx, x, pid, cam))
    identities = [Identity(i, centers[i].copy()) for i in range(spec.n_identities)]
    return samples, identities


def as_arrays(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(inputs, identities, cameras) stacked in sample order."""
    x = np.stack([s.input for s in samples]).astype(np.float64)
    ids = np.array([s.identity for s in samples], dtype=np.int64)
    cams = np.array([s.camera for s in samples], dtype=np.int64)
    return x, ids, cams


@dataclass(frozen=True)
class Split:
    query: np.ndarray
    gallery: np.ndarray
    excluded_identities: int


def split_query_gallery(samples: Sequence[Sample], query_fraction: float, seed: int = 0) -> Split:
    """Per-identity query/gallery split.

    Each identity contributes ``round(query_fraction * n_i)`` queries, chosen so
    every query keeps a same-identity gallery sample on another camera.
    Identities with a single sample, or whose samples share one camera, give no
    queries and are counted in ``excluded_identities``.
    """
    if not 0 < query_fraction < 1:
        raise ConfigError("query_fraction", "must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    by_id: dict[int, list[int]] = {}
    for pos, s in enumerate(samples):
        by_id.setdefault(s.identity, []).append(pos)

    query: list[int] = []
    excluded = 0
    for pid in sorted(by_id):
        members = by_id[pid]
        cams = {samples[p].camera for p in members}
        if len(members) < 2 or len(cams) < 2:
            excluded += 1
            continue
        want = int(round(query_fraction * len(members)))
        chosen: list[int] = []
        for p in rng.permutation(members):
            if len(chosen) == want:
                break
            trial = chosen + [int(p)]
            rest = [m for m in members if m not in trial]
            rest_cams = {samples[m].camera for m in rest}
            if all(rest_cams - {samples[q].camera} for q in trial):
                chosen = trial
        if not chosen:
            excluded += 1
        query.extend(chosen)

    qset = set(query)
    gallery = [p for p in range(len(samples)) if p not in qset]
    return Split(np.array(sorted(query), dtype=np.int64), np.array(gallery, dtype=np.int64), excluded)


def dump_csv(samples: Sequence[Sample], path: str | Path) -> None:
    d = len(samples[0].input)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "identity", "camera"] + [f"x{j}" for j in range(d)])
        for s in samples:
            w.writerow([s.index, s.identity, s.camera] + [repr(float(v)) for v in s.input])


def load_csv(path: str | Path) -> list[Sample]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:3] != ["index", "identity", "camera"]:
            raise ConfigError("header", f"expected index,identity,camera,... got {header[:3]}")
        return [
            Sample(int(row[0]), np.array([float(v) for v in row[3:]]), int(row[1]), int(row[2]))
            for row in r
        ]

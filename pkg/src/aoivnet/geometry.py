"""Poisson line process and the Cox point process of vehicles and RSUs.

Roads are lines ``x cos(theta) + y sin(theta) = rho`` sampled from a
homogeneous PPP on the strip ``[-R, R] x (0, pi)``; transmitters are 1-D PPPs
on each road's chord inside the observation disk of radius ``R``. The tagged
receiver sits at the origin on an extra road through the origin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .config import NetworkConfig


class GeometryError(ValueError):
    """Parameter outside the domain of a geometric sampler."""


class NodeKind(enum.IntEnum):
    TX_VEHICLE = 0
    TX_RSU = 1


@dataclass(frozen=True)
class Line:
    rho: float
    theta: float

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    @property
    def direction(self) -> np.ndarray:
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    def point(self, offset) -> np.ndarray:
        """Point(s) at signed ``offset`` along the line from its foot point."""
        offset = np.asarray(offset, dtype=float)
        return self.rho * self.normal + offset[..., None] * self.direction

    def half_chord(self, radius: float) -> float:
        """Half-length of the chord cut by the disk of ``radius`` (0 if it misses)."""
        return math.sqrt(max(radius * radius - self.rho * self.rho, 0.0))

    def residual(self, xy):
        """Distance of point(s) ``xy`` (shape ``(2,)`` or ``(n, 2)``) from the line."""
        xy = np.asarray(xy, dtype=float)
        out = np.abs(xy @ self.normal - self.rho)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Node:
    line_index: int
    offset: float
    kind: NodeKind
    position: tuple[float, float]


def _check_rng(rng) -> np.random.Generator:
    if rng is None or isinstance(rng, (int, np.integer, list, tuple)):
        return np.random.default_rng(rng)
    return rng


def sample_lines(line_intensity: float, disk_radius: float, rng=None) -> list[Line]:
    """Sample the lines of a Poisson line process that can hit a disk.

    The number of lines is Poisson with mean ``line_intensity * pi * 2R``.
    """
    if line_intensity < 0 or not math.isfinite(line_intensity):
        raise GeometryError(f"line intensity must be >= 0 (got {line_intensity})")
    if disk_radius <= 0:
        raise GeometryError(f"disk radius must be > 0 (got {disk_radius})")
    rng = _check_rng(rng)
    n = rng.poisson(line_intensity * math.pi * 2.0 * disk_radius)
    rho = rng.uniform(-disk_radius, disk_radius, n)
    theta = rng.uniform(0.0, math.pi, n)
    return [Line(float(r), float(t)) for r, t in zip(rho, theta)]


def _line_offsets(half_chord: float, intensity: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(intensity * 2.0 * half_chord)
    return rng.uniform(-half_chord, half_chord, n)


def populate_line(
    line: Line,
    intensity: float,
    kind: NodeKind,
    disk_radius: float,
    rng=None,
    line_index: int = 0,
) -> list[Node]:
    """Place a 1-D PPP of ``kind`` nodes on the chord of ``line`` inside the disk."""
    if intensity < 0 or not math.isfinite(intensity):
        raise GeometryError(f"node intensity must be >= 0 (got {intensity})")
    if disk_radius <= 0:
        raise GeometryError(f"disk radius must be > 0 (got {disk_radius})")
    rng = _check_rng(rng)
    offsets = _line_offsets(line.half_chord(disk_radius), intensity, rng)
    nodes = []
    for s in offsets:
        x, y = line.point(float(s))
        nodes.append(Node(line_index, float(s), NodeKind(kind), (float(x), float(y))))
    return nodes


@dataclass(frozen=True)
class SpatialRealization:
    """One sample of the Cox process around the tagged link.

    Interferers are stored column-wise (``line_index``, ``offset``, ``kind``,
    ``positions``); :attr:`nodes` gives the per-node view. The tagged pair is
    not part of the interferer arrays.
    """

    lines: tuple[Line, ...]
    line_index: np.ndarray
    offset: np.ndarray
    kind: np.ndarray
    positions: np.ndarray
    tagged_tx: np.ndarray
    tagged_line_index: int
    seed: object = None
    tagged_rx: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def nodes(self) -> list[Node]:
        return [
            Node(int(i), float(s), NodeKind(int(k)), (float(p[0]), float(p[1])))
            for i, s, k, p in zip(self.line_index, self.offset, self.kind, self.positions)
        ]

    @property
    def n_interferers(self) -> int:
        return int(self.offset.size)

    def distances(self) -> np.ndarray:
        """Distances from every interferer to the tagged receiver."""
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def link_distance(self) -> float:
        return float(np.hypot(*self.tagged_tx))

    def rotated(self, angle: float) -> "SpatialRealization":
        """Rotate the whole realization about the origin by ``angle`` radians."""
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        lines, flipped = [], []
        for ln in self.lines:
            theta, rho = ln.theta + angle, ln.rho
            # keep theta in (0, pi); flipping the normal also flips the direction
            theta = math.fmod(theta, 2 * math.pi)
            if theta <= 0:
                theta += 2 * math.pi
            flip = theta >= math.pi
            if flip:
                theta, rho = theta - math.pi, -rho
            lines.append(Line(rho, theta))
            flipped.append(flip)
        sign = np.where(np.array(flipped, dtype=bool)[self.line_index], -1.0, 1.0)
        return SpatialRealization(
            lines=tuple(lines),
            line_index=self.line_index,
            offset=self.offset * sign,
            kind=self.kind,
            positions=self.positions @ rot.T,
            tagged_tx=rot @ self.tagged_tx,
            tagged_line_index=self.tagged_line_index,
            seed=self.seed,
        )


def sample_realization(config: "NetworkConfig", rng=None) -> SpatialRealization:
    """Sample roads, vehicles and RSUs around a tagged receiver at the origin.

    The tagged road passes through the origin with a uniform angle and carries
    its own vehicles and RSUs; the tagged transmitter sits ``config.x_r`` along
    that road's positive direction.
    """
    seed = rng if isinstance(rng, (int, np.integer, list, tuple)) else None
    rng = _check_rng(rng)
    radius = config.disk_radius_m
    lines = sample_lines(config.lambda_l, radius, rng)
    tagged = Line(0.0, float(rng.uniform(0.0, math.pi)))
    lines.append(tagged)
    tagged_index = len(lines) - 1

    idx, off, kinds = [], [], []
    for i, line in enumerate(lines):
        h = line.half_chord(radius)
        for kind, lam in ((NodeKind.TX_VEHICLE, config.lambda_pv), (NodeKind.TX_RSU, config.lambda_pr)):
            s = _line_offsets(h, lam, rng)
            idx.append(np.full(s.size, i, dtype=np.intp))
            off.append(s)
            kinds.append(np.full(s.size, int(kind), dtype=np.int8))

    line_index = np.concatenate(idx)
    offset = np.concatenate(off)
    rho = np.array([ln.rho for ln in lines])[line_index]
    theta = np.array([ln.theta for ln in lines])[line_index]
    positions = np.column_stack(
        (rho * np.cos(theta) - offset * np.sin(theta), rho * np.sin(theta) + offset * np.cos(theta))
    )
    return SpatialRealization(
        lines=tuple(lines),
        line_index=line_index,
        offset=offset,
        kind=np.concatenate(kinds),
        positions=positions,
        tagged_tx=tagged.point(config.x_r),
        tagged_line_index=tagged_index,
        seed=seed,
    )


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index`` under master ``seed``."""
    return np.random.default_rng([int(seed), int(index)])

"""Tile partition by owner set, and FoV to tile mapping on the equirectangular grid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core_model import TileIndex, UserDemand, UserSubset, VideoConfig

_EPS = 1e-9


def canonical_subset(users: Iterable[int]) -> UserSubset:
    return tuple(sorted(set(int(u) for u in users)))


def subset_order(s: UserSubset) -> tuple:
    return (len(s), s)


@dataclass(frozen=True)
class Partition:
    """Mapping from user subsets S to the tiles needed by exactly S."""

    groups: dict[UserSubset, frozenset[TileIndex]]

    @property
    def index_set(self) -> list[UserSubset]:
        return sorted(self.groups, key=subset_order)

    def size(self, s: UserSubset) -> int:
        return len(self.groups[s])

    def __eq__(self, other):
        return isinstance(other, Partition) and self.groups == other.groups

    def __hash__(self):
        return hash(frozenset(self.groups.items()))


def compute_partition(demands: Sequence[UserDemand]) -> Partition:
    """Group every demanded tile on the set of users that need it."""
    owners: dict[TileIndex, list[int]] = {}
    for d in demands:
        for tile in d.tiles:
            owners.setdefault(tile, []).append(d.user)
    groups: dict[UserSubset, set[TileIndex]] = {}
    for tile, users in owners.items():
        groups.setdefault(canonical_subset(users), set()).add(tile)
    ordered = sorted(groups, key=subset_order)
    return Partition({s: frozenset(groups[s]) for s in ordered})


def partition_violations(part: Partition, demands: Sequence[UserDemand]) -> list[str]:
    out = []
    union = set().union(*(d.tiles for d in demands)) if demands else set()
    seen: set[TileIndex] = set()
    by_user = {d.user: d.tiles for d in demands}
    for s, tiles in part.groups.items():
        if not s:
            out.append("empty user subset")
            continue
        if not tiles:
            out.append(f"P_{set(s)} is empty")
        if seen & tiles:
            out.append(f"P_{set(s)} overlaps another group")
        seen |= tiles
        for tile in tiles:
            owner = canonical_subset(k for k, g in by_user.items() if tile in g)
            if owner != s:
                out.append(f"tile {tile} stored under {set(s)} but owned by {set(owner)}")
                break
    if seen != union:
        out.append("groups do not cover the union of demanded tiles")
    return out


def _overlap(a0: float, a1: float, b0: float, b1: float) -> bool:
    return min(a1, b1) - max(a0, b0) > _EPS


def tiles_for_fov(
    center: tuple[float, float],
    fov_span: tuple[float, float],
    margin: float,
    video: VideoConfig,
) -> frozenset[TileIndex]:
    """Tiles whose angular rectangle meets the margin-padded FoV with nonzero area.

    ``center`` is ``(latitude, longitude)`` in degrees, latitude in [-90, 90]
    and longitude taken modulo 360.  ``fov_span`` is ``(horizontal, vertical)``.
    Row 1 is the northernmost row, column 1 starts at longitude 0.
    """
    span_h, span_v = fov_span
    if span_h <= 0 or span_v <= 0 or margin < 0:
        raise ValueError("FoV spans must be positive and margin nonnegative")
    width, height = span_h + 2 * margin, span_v + 2 * margin
    if width > 360 + _EPS or height > 180 + _EPS:
        raise ValueError(f"padded FoV {width}x{height} exceeds the sphere")
    lat, lon = float(center[0]), float(center[1]) % 360.0
    dlat, dlon = 180.0 / video.rows, 360.0 / video.cols

    top, bottom = lat + height / 2, lat - height / 2
    # a cap over a pole spans every longitude
    north_cap = 90.0 - (top - 90.0) if top > 90.0 else math.inf
    south_cap = -90.0 + (-90.0 - bottom) if bottom < -90.0 else -math.inf
    top, bottom = min(top, 90.0), max(bottom, -90.0)

    lo = lon - width / 2
    hi = lon + width / 2
    full_lon = width >= 360.0 - _EPS

    out = set()
    for m in range(1, video.rows + 1):
        r_hi = 90.0 - (m - 1) * dlat
        r_lo = 90.0 - m * dlat
        if not _overlap(r_lo, r_hi, bottom, top):
            continue
        in_cap = _overlap(r_lo, r_hi, north_cap, 90.0) or _overlap(r_lo, r_hi, -90.0, south_cap)
        for n in range(1, video.cols + 1):
            c_lo = (n - 1) * dlon
            c_hi = n * dlon
            if full_lon or in_cap or any(
                _overlap(c_lo + shift, c_hi + shift, lo, hi) for shift in (-360.0, 0.0, 360.0)
            ):
                out.add((m, n))
    return frozenset(out)

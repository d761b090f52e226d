"""Domain types for multi-quality tiled 360 video multicast.

Tiles are addressed 1-based as ``(row, col)`` and users are numbered
``1..K``.  Everything here is immutable once built.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .partition import Partition

TileIndex = tuple[int, int]
UserSubset = tuple[int, ...]

BOLTZMANN = 1.38e-23  # J/K

# default per-tile encoding rates (bits/s) for quality levels 1..5.
DEFAULT_ENCODING_RATES = (6.66e5, 16.18e5, 24.29e5, 32.01e5, 40.23e5)


@dataclass(frozen=True)
class VideoConfig:
    rows: int = 18
    cols: int = 36
    encoding_rates: tuple[float, ...] = DEFAULT_ENCODING_RATES

    def __post_init__(self):
        object.__setattr__(self, "encoding_rates", tuple(float(d) for d in self.encoding_rates))

    @property
    def levels(self) -> int:
        return len(self.encoding_rates)

    def rate(self, level: int) -> float:
        """Encoding rate D_l of quality level ``level`` (1-based)."""
        return self.encoding_rates[level - 1]


@dataclass(frozen=True)
class UserDemand:
    user: int
    tiles: frozenset[TileIndex]
    quality: int

    def __post_init__(self):
        object.__setattr__(self, "tiles", frozenset((int(m), int(n)) for m, n in self.tiles))


@dataclass(frozen=True)
class ChannelModel:
    """Per-user finite channel state spaces with independent users.

    ``gains[k]`` and ``probs[k]`` are the marginal state space of user
    ``k + 1``.  The joint space is the full product, enumerated with the
    last user varying fastest.
    """

    gains: tuple[tuple[float, ...], ...]
    probs: tuple[tuple[float, ...], ...]
    states: np.ndarray = field(init=False, repr=False, compare=False)
    state_probs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gains = tuple(tuple(float(g) for g in row) for row in self.gains)
        probs = tuple(tuple(float(p) for p in row) for row in self.probs)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "probs", probs)
        if len(gains) != len(probs) or any(len(g) != len(p) for g, p in zip(gains, probs)):
            raise ValueError("channel gains and probabilities must have matching shapes")
        idx = list(itertools.product(*[range(len(g)) for g in gains]))
        states = np.array([[gains[k][i] for k, i in enumerate(combo)] for combo in idx], dtype=float)
        q = np.array([np.prod([probs[k][i] for k, i in enumerate(combo)]) for combo in idx], dtype=float)
        states.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "states", states.reshape(len(idx), len(gains)))
        object.__setattr__(self, "state_probs", q)

    @property
    def users(self) -> int:
        return len(self.gains)

    @property
    def n_states(self) -> int:
        return len(self.state_probs)


@dataclass(frozen=True)
class SystemParams:
    bandwidth: float = 150e6
    frame: float = 0.05
    noise: float = 150e6 * BOLTZMANN * 300.0
    transcode_energy: tuple[float, ...] = ()
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "transcode_energy", tuple(float(x) for x in self.transcode_energy))


@dataclass(frozen=True)
class Instance:
    video: VideoConfig
    demands: tuple[UserDemand, ...]
    channel: ChannelModel
    params: SystemParams
    partition: "Partition" = field(default=None, compare=False)

    def __post_init__(self):
        from .partition import compute_partition

        object.__setattr__(self, "demands", tuple(self.demands))
        if self.partition is None:
            object.__setattr__(self, "partition", compute_partition(self.demands))

    @property
    def users(self) -> int:
        return len(self.demands)

    @property
    def qualities(self) -> tuple[int, ...]:
        return tuple(d.quality for d in self.demands)

    def with_qualities(self, qualities: Sequence[int]) -> "Instance":
        demands = tuple(UserDemand(d.user, d.tiles, int(r)) for d, r in zip(self.demands, qualities))
        return Instance(self.video, demands, self.channel, self.params, self.partition)


def validate_instance(inst: Instance) -> list[str]:
    """Return the list of violated invariants; an empty list means ok."""
    out = []
    v = inst.video
    if v.rows < 1 or v.cols < 1:
        out.append(f"video: grid must be at least 1x1, got {v.rows}x{v.cols}")
    if v.levels < 1:
        out.append("video: at least one quality level required")
    if any(d <= 0 for d in v.encoding_rates):
        out.append("video: encoding rates must be positive")
    if any(b <= a for a, b in zip(v.encoding_rates, v.encoding_rates[1:])):
        out.append("video: encoding rates not strictly increasing")

    if not inst.demands:
        out.append("demands: at least one user required")
    for i, d in enumerate(inst.demands, start=1):
        if d.user != i:
            out.append(f"demands[{i}]: user id {d.user} != position {i}")
        if not d.tiles:
            out.append(f"demands[{i}]: tile set is empty")
        for m, n in sorted(d.tiles):
            if not (1 <= m <= v.rows and 1 <= n <= v.cols):
                out.append(f"demands[{i}]: tile ({m},{n}) outside {v.rows}x{v.cols} grid")
        if not 1 <= d.quality <= v.levels:
            out.append(f"demands[{i}]: quality requirement out of range: {d.quality} not in 1..{v.levels}")

    ch = inst.channel
    if ch.users != inst.users:
        out.append(f"channel: {ch.users} users but {inst.users} demands")
    for k, (g, p) in enumerate(zip(ch.gains, ch.probs), start=1):
        if not g:
            out.append(f"channel[{k}]: empty state space")
        if any(x <= 0 for x in g):
            out.append(f"channel[{k}]: gains must be positive")
        if len(set(g)) != len(g):
            out.append(f"channel[{k}]: gains must be distinct")
        if any(x < 0 for x in p):
            out.append(f"channel[{k}]: negative probability")
        if abs(sum(p) - 1.0) > 1e-12:
            out.append(f"channel[{k}]: probabilities sum to {sum(p)!r}, not 1")
    if ch.n_states and abs(float(ch.state_probs.sum()) - 1.0) > 1e-12:
        out.append("channel: joint probabilities do not sum to 1")

    p = inst.params
    for name in ("bandwidth", "frame", "noise"):
        if not getattr(p, name) > 0:
            out.append(f"params: {name} must be positive")
    if len(p.transcode_energy) != inst.users:
        out.append(f"params: {len(p.transcode_energy)} transcoding energies for {inst.users} users")
    if any(x < 0 for x in p.transcode_energy):
        out.append("params: transcoding energy must be nonnegative")
    if not p.beta >= 1:
        out.append(f"params: beta must be >= 1, got {p.beta}")

    if inst.partition is not None and inst.demands:
        from .partition import partition_violations

        out.extend(f"partition: {msg}" for msg in partition_violations(inst.partition, inst.demands))
    return out

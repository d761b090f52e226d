"""Randomized experiment instances: Zipf viewing directions, uniform quality requirements."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core_model import BOLTZMANN, ChannelModel, Instance, SystemParams, UserDemand, VideoConfig
from .partition import tiles_for_fov

MAX_USERS = 8

# five equatorial viewing directions, listed in popularity order (rank 1 first)
DEFAULT_VIEW_DIRECTIONS = ((0.0, 100.0), (0.0, 140.0), (0.0, 180.0), (0.0, 220.0), (0.0, 260.0))

# purpose tags for RNG stream splitting
_VD, _QUALITY = 0, 1


def zipf_probabilities(gamma: float, count: int = 5) -> np.ndarray:
    if gamma < 0:
        raise ValueError(f"Zipf exponent must be >= 0, got {gamma}")
    if count < 1:
        raise ValueError("count must be >= 1")
    w = np.arange(1, count + 1, dtype=float) ** (-float(gamma))
    return w / w.sum()


def joint_channel_states(gains: Sequence[Sequence[float]], probs: Sequence[Sequence[float]]) -> ChannelModel:
    """Product-form joint channel model from per-user marginals."""
    if len(gains) > MAX_USERS:
        raise ValueError(f"at most {MAX_USERS} users supported, got {len(gains)}")
    return ChannelModel(tuple(map(tuple, gains)), tuple(map(tuple, probs)))


@dataclass(frozen=True)
class ScenarioConfig:
    users: int = 3
    gamma: float = 0.0
    quality_lb: int = 1
    quality_ub: int = 5
    view_directions: tuple[tuple[float, float], ...] = DEFAULT_VIEW_DIRECTIONS
    fov: tuple[float, float] = (100.0, 100.0)
    margin: float = 10.0
    video: VideoConfig = field(default_factory=VideoConfig)
    bandwidth: float = 150e6
    frame: float = 0.05
    noise: float | None = None  # defaults to bandwidth * k_B * temperature
    temperature: float = 300.0
    transcode_energy: float = 1e-6
    beta: float = 1.0
    channel_gains: tuple[float, ...] = (1e-6, 2e-6)
    channel_probs: tuple[float, ...] = (0.5, 0.5)
    realizations: int = 100
    seed: int = 0

    def check(self) -> list[str]:
        out = []
        if not 1 <= self.users <= MAX_USERS:
            out.append(f"users must be in 1..{MAX_USERS}")
        if self.gamma < 0:
            out.append("gamma must be >= 0")
        if not 1 <= self.quality_lb <= self.quality_ub <= self.video.levels:
            out.append(f"need 1 <= quality_lb <= quality_ub <= {self.video.levels}")
        if not self.view_directions:
            out.append("at least one viewing direction required")
        for name in ("bandwidth", "frame", "temperature", "margin"):
            if getattr(self, name) < 0 or (name != "margin" and getattr(self, name) == 0):
                out.append(f"{name} must be positive")
        if self.noise is not None and self.noise <= 0:
            out.append("noise must be positive")
        if self.transcode_energy < 0:
            out.append("transcode_energy must be >= 0")
        if self.beta < 1:
            out.append("beta must be >= 1")
        if len(self.channel_gains) != len(self.channel_probs) or not self.channel_gains:
            out.append("channel gains and probabilities must have the same nonzero length")
        if any(g <= 0 for g in self.channel_gains) or any(p < 0 for p in self.channel_probs):
            out.append("channel gains must be positive and probabilities nonnegative")
        if abs(sum(self.channel_probs) - 1.0) > 1e-12:
            out.append("channel probabilities must sum to 1")
        if self.realizations < 1:
            out.append("realizations must be >= 1")
        return out

    @property
    def noise_power(self) -> float:
        return self.noise if self.noise is not None else self.bandwidth * BOLTZMANN * self.temperature

    def params(self) -> SystemParams:
        return SystemParams(
            self.bandwidth, self.frame, self.noise_power, (self.transcode_energy,) * self.users, self.beta
        )

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class Realization:
    index: int
    view_direction: tuple[int, ...]  # 0-based catalog position per user
    qualities: tuple[int, ...]
    instance: Instance


def _uniform(seed: int, index: int, user: int, tag: int) -> float:
    return float(np.random.default_rng([seed, index, user, tag]).random())


def sample_realization(cfg: ScenarioConfig, index: int) -> Realization:
    """Draw realization ``index``; each user's draws come from their own RNG stream.

    Streams are keyed by (seed, index, user, purpose) and drawn by inverse
    CDF, so user k's draw is the same whatever K, gamma or quality range.
    """
    errors = cfg.check()
    if errors:
        raise ValueError("; ".join(errors))
    cdf = np.cumsum(zipf_probabilities(cfg.gamma, len(cfg.view_directions)))
    cdf[-1] = 1.0
    span = cfg.quality_ub - cfg.quality_lb + 1
    vds, qs, demands = [], [], []
    tile_cache = {}
    for k in range(cfg.users):
        rank = int(np.searchsorted(cdf, _uniform(cfg.seed, index, k, _VD), side="right"))
        rank = min(rank, len(cdf) - 1)
        q = cfg.quality_lb + min(int(_uniform(cfg.seed, index, k, _QUALITY) * span), span - 1)
        if rank not in tile_cache:
            tile_cache[rank] = tiles_for_fov(cfg.view_directions[rank], cfg.fov, cfg.margin, cfg.video)
        vds.append(rank)
        qs.append(q)
        demands.append(UserDemand(k + 1, tile_cache[rank], q))
    channel = joint_channel_states([cfg.channel_gains] * cfg.users, [cfg.channel_probs] * cfg.users)
    inst = Instance(cfg.video, tuple(demands), channel, cfg.params())
    return Realization(index, tuple(vds), tuple(qs), inst)

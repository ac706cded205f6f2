"""Analytical source model and the synthetic target fixture.

The source model is pure mass conservation: a printed line of width W and
height h deposits what the filament feeds, so W = F*A/(S*h) with A the
filament cross-section. The synthetic target applies a monotone concave
distortion alpha * W**p + offset to that width, mimicking the nonlinear
ground truth that the cheap source model misses, and masks out unstable
printing regimes via a band on W/h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ORIGIN_SOURCE, ORIGIN_TARGET, derived_rng
from .errors import InvalidRange, NonPositiveInput

DEFAULT_F_RANGE = (153.0, 729.0)  # mm/min
DEFAULT_S_RANGE = (350.0, 725.0)  # mm/min
DEFAULT_GRID_N = 16
DEFAULT_FILAMENT_DIAMETER = 1.75  # mm
DEFAULT_STABILITY_BAND = (0.5, 4.0)
# 624-sample source pool approximated as a 16 x 13 grid per h (3 * 16 * 13)
DEFAULT_POOL_N_F = 16
DEFAULT_POOL_N_S = 13


@dataclass(frozen=True)
class SourceModelConfig:
    h: float
    filament_diameter: float = DEFAULT_FILAMENT_DIAMETER

    def __post_init__(self):
        if self.h <= 0 or self.filament_diameter <= 0:
            raise NonPositiveInput("h and filament_diameter must be positive")

    @property
    def area(self) -> float:
        """Filament cross-sectional area pi*d^2/4, mm^2."""
        return math.pi * self.filament_diameter**2 / 4.0


@dataclass(frozen=True)
class SyntheticTargetConfig:
    alpha: float = 1.0
    p: float = 1.0
    offset: float = 0.0
    noise_std: float = 0.0
    stability_band: tuple[float, float] = DEFAULT_STABILITY_BAND
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise InvalidRange(f"exponent p={self.p} must lie in (0, 1]")
        if self.noise_std < 0:
            raise InvalidRange("noise_std must be >= 0")
        if self.stability_band[0] >= self.stability_band[1]:
            raise InvalidRange(f"unordered stability band {self.stability_band}")


def default_synthetic_config(h: float, noise_std: float = 0.02,
                             seed: int = 0) -> SyntheticTargetConfig:
    """Per-h fixture defaults; the distortion is strongest at the lowest h."""
    by_h = {0.7: (1.1, 0.55), 0.85: (1.05, 0.7), 1.2: (1.0, 0.85)}
    alpha, p = by_h.get(h, (1.05, 0.7))
    return SyntheticTargetConfig(
        alpha=alpha, p=p, offset=0.1 * h, noise_std=noise_std, seed=seed,
    )


def source_width(f, s, cfg: SourceModelConfig):
    """Mass-conservation line width f*A/(s*h), mm. Accepts scalars or arrays."""
    f = np.asarray(f, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(f <= 0) or np.any(s <= 0):
        raise NonPositiveInput("f and s must be positive")
    w = f * cfg.area / (s * cfg.h)
    return float(w) if w.ndim == 0 else w


def _grid(f_range, s_range, n_f, n_s):
    if f_range[0] >= f_range[1] or s_range[0] >= s_range[1]:
        raise InvalidRange(f"unordered ranges {f_range}, {s_range}")
    if n_f < 2 or n_s < 2:
        raise InvalidRange("grids need at least 2 levels per axis")
    f_levels = np.linspace(f_range[0], f_range[1], n_f)
    s_levels = np.linspace(s_range[0], s_range[1], n_s)
    ss, ff = np.meshgrid(s_levels, f_levels, indexing="ij")
    return ff.ravel(), ss.ravel()


def generate_source_grid(f_range=DEFAULT_F_RANGE, s_range=DEFAULT_S_RANGE,
                         n_f: int = DEFAULT_GRID_N, n_s: int = DEFAULT_GRID_N,
                         cfg: SourceModelConfig | None = None) -> Dataset:
    """Equidistant (f, s) grid labelled by the analytical source model."""
    cfg = cfg if cfg is not None else SourceModelConfig(h=0.7)
    f, s = _grid(f_range, s_range, n_f, n_s)
    w = source_width(f, s, cfg)
    return Dataset(f, s, np.full_like(f, cfg.h), w, [ORIGIN_SOURCE] * len(f))


def synthetic_truth(f, s, cfg_src: SourceModelConfig,
                    cfg_syn: SyntheticTargetConfig):
    """Noiseless synthetic ground truth alpha * W_source**p + offset, mm."""
    w = source_width(f, s, cfg_src)
    out = cfg_syn.alpha * np.asarray(w) ** cfg_syn.p + cfg_syn.offset
    return float(out) if out.ndim == 0 else out


def generate_synthetic_target(f_range=DEFAULT_F_RANGE, s_range=DEFAULT_S_RANGE,
                              n_f: int = DEFAULT_GRID_N, n_s: int = DEFAULT_GRID_N,
                              cfg_src: SourceModelConfig | None = None,
                              cfg_syn: SyntheticTargetConfig | None = None) -> Dataset:
    """Noisy synthetic target grid with unstable cells masked out.

    Noise is drawn for the full grid before masking, so each cell's draw
    depends only on (seed, cell index) and never on the mask or execution
    order.
    """
    cfg_src = cfg_src if cfg_src is not None else SourceModelConfig(h=0.7)
    cfg_syn = cfg_syn if cfg_syn is not None else SyntheticTargetConfig()
    f, s = _grid(f_range, s_range, n_f, n_s)
    w_src = source_width(f, s, cfg_src)
    truth = synthetic_truth(f, s, cfg_src, cfg_syn)
    noise = derived_rng(cfg_syn.seed).normal(0.0, 1.0, size=len(f)) * cfg_syn.noise_std
    w = np.maximum(truth + noise, 0.0)
    lo, hi = cfg_syn.stability_band
    ratio = w_src / cfg_src.h
    keep = (ratio >= lo) & (ratio <= hi)
    idx = np.flatnonzero(keep)
    return Dataset(f[idx], s[idx], np.full(len(idx), cfg_src.h), w[idx],
                   [ORIGIN_TARGET] * len(idx))


def generate_source_pool(h: float, n_f: int = DEFAULT_POOL_N_F,
                         n_s: int = DEFAULT_POOL_N_S,
                         filament_diameter: float = DEFAULT_FILAMENT_DIAMETER) -> Dataset:
    """Per-h source pool on a denser default grid (16 x 13 = 208 samples)."""
    cfg = SourceModelConfig(h=h, filament_diameter=filament_diameter)
    return generate_source_grid(n_f=n_f, n_s=n_s, cfg=cfg)

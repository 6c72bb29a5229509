"""Geometric multipath channels and noisy beamformed measurements."""
from dataclasses import dataclass, field, replace

import numpy as np

from .array import TWO_PI, steering_vector


@dataclass(frozen=True)
class PathParams:
    gain: complex
    aod_az: float
    aoa_az: float
    aod_el: float = 0.0
    aoa_el: float = 0.0


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    paths: tuple
    bs: object = field(default=None, compare=False)
    ms: object = field(default=None, compare=False)

    @property
    def n_bs(self):
        return self.h.shape[1]

    @property
    def n_ms(self):
        return self.h.shape[0]


@dataclass(frozen=True)
class PathSamplerConfig:
    """Simplified stand-in for a measurement-based path generator.

    ``num_paths`` is either a positive int or the string ``"uniform"`` (1..6
    paths drawn uniformly).  ``gain_distribution`` is ``"unit-gain"`` or
    ``"complex-normal"``; ``angle_mode`` is ``"continuous-uniform"`` or
    ``"on-grid"`` (in which case ``grid_points`` must be set).
    """
    num_paths: object = 1
    gain_distribution: str = "unit-gain"
    angle_mode: str = "continuous-uniform"
    grid_points: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.num_paths != "uniform" and int(self.num_paths) < 1:
            raise ValueError("num_paths must be >= 1")
        if self.gain_distribution not in ("unit-gain", "complex-normal"):
            raise ValueError(f"unknown gain_distribution {self.gain_distribution!r}")
        if self.angle_mode not in ("continuous-uniform", "on-grid"):
            raise ValueError(f"unknown angle_mode {self.angle_mode!r}")
        if self.angle_mode == "on-grid" and self.grid_points < 2:
            raise ValueError("on-grid sampling needs grid_points >= 2")


def _sorted_paths(paths):
    return tuple(sorted(paths, key=lambda p: -abs(p.gain)))


def synthesize_channel(paths, bs, ms):
    """Build ``H = sqrt(N_BS N_MS / L) sum_l alpha_l a_MS(aoa_l) a_BS(aod_l)^H``."""
    paths = list(paths)
    if not paths:
        raise ValueError("channel needs at least one path")
    gains = np.array([p.gain for p in paths], dtype=complex)
    a_bs = steering_vector(bs, [p.aod_az for p in paths])
    a_ms = steering_vector(ms, [p.aoa_az for p in paths])
    scale = np.sqrt(bs.num_elements * ms.num_elements / len(paths))
    h = scale * (a_ms * gains) @ a_bs.conj().T
    return ChannelRealization(h=h, paths=_sorted_paths(paths), bs=bs, ms=ms)


def sample_paths(cfg, rng):
    if cfg.num_paths == "uniform":
        n = int(rng.integers(1, 7))
    else:
        n = int(cfg.num_paths)

    if cfg.angle_mode == "on-grid":
        aod = TWO_PI * rng.integers(0, cfg.grid_points, n) / cfg.grid_points
        aoa = TWO_PI * rng.integers(0, cfg.grid_points, n) / cfg.grid_points
    else:
        aod = rng.uniform(0.0, TWO_PI, n)
        aoa = rng.uniform(0.0, TWO_PI, n)

    if cfg.gain_distribution == "unit-gain":
        gains = np.exp(1j * rng.uniform(0.0, TWO_PI, n))
    else:
        gains = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        gains *= np.sqrt(n / np.sum(np.abs(gains) ** 2))

    paths = [PathParams(complex(g), float(d), float(a)) for g, d, a in zip(gains, aod, aoa)]
    return _sorted_paths(paths)


def complex_noise(rng, shape, noise_var):
    """i.i.d. circularly-symmetric CN(0, noise_var) samples."""
    return np.sqrt(noise_var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def measure(h, f, w, power, noise_var, rng):
    """Return ``sqrt(P) W^H H F + W^H N`` with ``N ~ CN(0, noise_var)`` entries.

    ``h`` may be a :class:`ChannelRealization` or a bare matrix.  No random
    numbers are drawn when ``noise_var == 0``.
    """
    hm = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    f = np.asarray(f, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    if w.ndim == 1:
        w = w[:, None]
    if f.shape[0] != hm.shape[1] or w.shape[0] != hm.shape[0]:
        raise ValueError(
            f"precoder {f.shape} / combiner {w.shape} do not fit channel {hm.shape}")
    if power < 0 or noise_var < 0:
        raise ValueError("power and noise_var must be non-negative")
    y = np.sqrt(power) * (w.conj().T @ hm @ f)
    if noise_var > 0:
        y = y + w.conj().T @ complex_noise(rng, (hm.shape[0], f.shape[1]), noise_var)
    return y


def noise_var_for_snr(h, power, snr_linear):
    """Noise variance giving ``SNR = P ||H||_F^2 / (N_BS N_MS sigma^2)``."""
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    hm = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    energy = float(np.sum(np.abs(hm) ** 2))
    if energy == 0.0:
        raise ValueError("noise variance is undefined for an all-zero channel")
    return power * energy / (hm.shape[0] * hm.shape[1] * snr_linear)


def paths_to_text(paths):
    """One path per line: re(gain) im(gain) aod_az aoa_az aod_el aoa_el."""
    lines = [
        f"{p.gain.real!r} {p.gain.imag!r} {p.aod_az!r} {p.aoa_az!r} {p.aod_el!r} {p.aoa_el!r}"
        for p in paths
    ]
    return "\n".join(lines) + "\n"


def paths_from_text(text):
    paths = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        vals = [float(x) for x in line.split()]
        if len(vals) != 6:
            raise ValueError(f"path record needs 6 fields, got {len(vals)}: {line!r}")
        paths.append(PathParams(complex(vals[0], vals[1]), *vals[2:]))
    return tuple(paths)


def with_gains(paths, gains):
    return tuple(replace(p, gain=complex(g)) for p, g in zip(paths, gains))

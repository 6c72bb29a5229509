"""Uniform linear array responses and the quantized azimuth grid."""
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class UlaConfig:
    num_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if not self.spacing_wavelengths > 0:
            raise ValueError("spacing_wavelengths must be > 0")


@dataclass(frozen=True)
class AngleGrid:
    num_points: int

    @property
    def spacing(self):
        return TWO_PI / self.num_points

    @property
    def angles(self):
        return TWO_PI * np.arange(self.num_points) / self.num_points


def _phase(cfg, phi):
    n = np.arange(cfg.num_elements)[:, None]
    return 2j * np.pi * cfg.spacing_wavelengths * n * np.cos(phi)


def steering_vector(cfg, phi):
    """Array response ``a(phi)`` as an ``N x 1`` column with unit norm.

    ``phi`` may also be a 1-D array of angles, in which case one column per
    angle is returned.  Angle 0 is parallel to the array axis.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[None, :]
    return np.exp(_phase(cfg, phi)) / np.sqrt(cfg.num_elements)


def steering_derivative(cfg, phi):
    """Analytic derivative ``d a(phi) / d phi``, same shape as :func:`steering_vector`."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[None, :]
    n = np.arange(cfg.num_elements)[:, None]
    factor = -2j * np.pi * cfg.spacing_wavelengths * n * np.sin(phi)
    return factor * np.exp(_phase(cfg, phi)) / np.sqrt(cfg.num_elements)


def make_grid(n):
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    return AngleGrid(int(n))


def fold_angle(phi):
    """Map an azimuth in [0, 2pi) onto [0, pi] (the ULA mirror ambiguity)."""
    phi = np.asarray(phi, dtype=float)
    out = np.minimum(phi, TWO_PI - phi)
    return float(out) if out.ndim == 0 else out

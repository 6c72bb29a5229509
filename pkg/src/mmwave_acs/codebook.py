"""Beamforming dictionaries (grid and CBP) and hierarchical codebooks."""
from dataclasses import dataclass, field

import numpy as np

from .array import AngleGrid, make_grid, steering_derivative, steering_vector
from .linalg import DEFAULT_PINV_TOL, frobenius_norm, pinv

GRID = "grid"
CBP = "cbp"


@dataclass(frozen=True, eq=False)
class Dictionary:
    kind: str
    grid: AngleGrid
    atoms: np.ndarray
    delta_phi: float
    cfg: object = None

    @property
    def num_grid(self):
        return self.grid.num_points

    def steering_atoms(self, idx):
        return self.atoms[:, idx]

    def derivative_atoms(self, idx):
        if self.kind != CBP:
            raise ValueError("grid dictionaries carry no derivative atoms")
        return self.atoms[:, self.num_grid + np.asarray(idx)]

    def columns_for(self, grid_index):
        """Dictionary columns that represent a path sitting at ``grid_index``."""
        if self.kind == CBP:
            return [grid_index, self.num_grid + grid_index]
        return [grid_index]


@dataclass(frozen=True, eq=False)
class HierarchicalCodebook:
    levels: int
    branching: int
    num_grid: int
    mats: dict
    constants: dict = field(default_factory=dict)
    kind: str = GRID

    def __getitem__(self, key):
        return self.mats[key]

    @property
    def num_antennas(self):
        return self.mats[1, 1].shape[0]

    @property
    def normalization_constant(self):
        """C of the level-1 block; see ``constants`` for every (level, subset)."""
        return self.constants[1, 1]


def build_grid_dictionary(cfg, n):
    grid = make_grid(n)
    return Dictionary(GRID, grid, steering_vector(cfg, grid.angles), 0.0, cfg)


def build_cbp_dictionary(cfg, n, delta_phi=None):
    """Steering atoms followed by ``delta_phi``-scaled derivative atoms.

    ``delta_phi`` defaults to the largest admissible offset, ``pi / n``.
    """
    grid = make_grid(n)
    if delta_phi is None:
        delta_phi = np.pi / n
    if abs(delta_phi) > np.pi / n * (1 + 1e-12):
        raise ValueError(f"|delta_phi| must not exceed pi/n = {np.pi / n:g}")
    a = steering_vector(cfg, grid.angles)
    b = delta_phi * steering_derivative(cfg, grid.angles)
    return Dictionary(CBP, grid, np.hstack([a, b]), float(delta_phi), cfg)


def mutual_coherence(atoms):
    """Largest normalized inner product between two distinct columns."""
    norms = np.linalg.norm(atoms, axis=0)
    ok = norms > 0
    g = np.abs(atoms[:, ok].conj().T @ atoms[:, ok]) / np.outer(norms[ok], norms[ok])
    np.fill_diagonal(g, 0.0)
    return float(g.max())


def levels_for(n, big_k):
    """Return S such that ``n == 2 * big_k**S``; raise otherwise."""
    if big_k < 2:
        raise ValueError("branching factor K must be >= 2")
    s, half = 0, n // 2
    if n % 2:
        raise ValueError(f"N={n} is not of the form 2*K^S for K={big_k}")
    while half > 1 and half % big_k == 0:
        half //= big_k
        s += 1
    if half != 1 or s < 1:
        raise ValueError(f"N={n} is not of the form 2*K^S for K={big_k}")
    return s


def _folded_positions(n):
    u = np.arange(n)
    return np.minimum(u, n - u)


def coverage_index_set(s, k, m, big_k, n, closed=False):
    """Grid indices whose angle lies in beam ``m`` of subset ``k`` at level ``s``.

    The beam spans ``[pi/K^s (K(k-1)+m-1), pi/K^s (K(k-1)+m)]`` plus its
    mirror image about pi.  By default grid points on a shared edge go to the
    lower-indexed beam so that the beams of one level partition the grid; with
    ``closed=True`` both edges are kept.
    """
    big_s = levels_for(n, big_k)
    if not 1 <= s <= big_s:
        raise ValueError(f"level {s} outside 1..{big_s}")
    if not 1 <= k <= big_k ** (s - 1):
        raise ValueError(f"subset {k} outside 1..{big_k ** (s - 1)}")
    if not 1 <= m <= big_k:
        raise ValueError(f"beam {m} outside 1..{big_k}")
    width = big_k ** (big_s - s)
    j = big_k * (k - 1) + m - 1
    p = _folded_positions(n)
    if closed:
        mask = (p >= j * width) & (p <= (j + 1) * width)
    else:
        owner = np.maximum(0, -(-p // width) - 1)
        mask = owner == j
    return np.flatnonzero(mask)


def build_codebook(dictionary, big_s, big_k, tol=DEFAULT_PINV_TOL):
    """Least-squares synthesis of the hierarchical codebook.

    Every beam solves ``atoms^H f = g`` where ``g`` is 1 on the covered grid
    points and 0 elsewhere (including all derivative rows for CBP).  Each
    ``K``-column block is then rescaled to Frobenius norm ``K``.
    """
    n = dictionary.num_grid
    if n != 2 * big_k ** big_s:
        raise ValueError(f"dictionary grid has {n} points, expected 2*K^S = {2 * big_k ** big_s}")
    solver = pinv(dictionary.atoms.conj().T, tol)
    rows = dictionary.atoms.shape[1]
    mats, consts = {}, {}
    for s in range(1, big_s + 1):
        for k in range(1, big_k ** (s - 1) + 1):
            g = np.zeros((rows, big_k))
            for m in range(1, big_k + 1):
                g[coverage_index_set(s, k, m, big_k, n), m - 1] = 1.0
            f = solver @ g
            scale = big_k / frobenius_norm(f)
            mats[s, k] = f * scale
            consts[s, k] = scale
    return HierarchicalCodebook(big_s, big_k, n, mats, consts, dictionary.kind)


def beam_pattern(f, cfg, angles):
    """``|F^H a(angle)|`` with one row per angle and one column per beam."""
    return np.abs(steering_vector(cfg, angles).conj().T @ f)


def derivative_residual(cb, dictionary, level=1):
    """Worst derivative leakage relative to the mean in-band response.

    For every beam at ``level`` this is ``max_u |f^H b(u)| / mean_cov |f^H a(u)|``
    with the unscaled derivative ``b``; the maximum over beams is returned.
    """
    cfg = dictionary.cfg
    angles = dictionary.grid.angles
    a = steering_vector(cfg, angles)
    b = steering_derivative(cfg, angles)
    worst = 0.0
    for k in range(1, cb.branching ** (level - 1) + 1):
        f = cb[level, k]
        for m in range(cb.branching):
            cov = coverage_index_set(level, k, m + 1, cb.branching, cb.num_grid)
            inband = np.mean(np.abs(f[:, m].conj() @ a[:, cov]))
            worst = max(worst, np.max(np.abs(f[:, m].conj() @ b)) / inband)
    return float(worst)


def save_codebook(cb, path):
    """Decimal text dump: a header, then one block per (level, subset)."""
    with open(path, "w") as fh:
        fh.write(f"# hierarchical-codebook kind={cb.kind}\n")
        fh.write(f"{cb.levels} {cb.branching} {cb.num_grid} {len(cb.mats)}\n")
        for (s, k), f in sorted(cb.mats.items()):
            fh.write(f"{s} {k} {f.shape[0]} {f.shape[1]} {float(cb.constants.get((s, k), 0.0))!r}\n")
            for z in f.ravel(order="F"):
                fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")


def load_codebook(path):
    with open(path) as fh:
        header = fh.readline()
        kind = header.strip().split("kind=")[-1] if "kind=" in header else GRID
        big_s, big_k, n, count = (int(x) for x in fh.readline().split())
        mats, consts = {}, {}
        for _ in range(count):
            parts = fh.readline().split()
            s, k, r, c = (int(x) for x in parts[:4])
            vals = np.array([[float(x) for x in fh.readline().split()] for _ in range(r * c)])
            mats[s, k] = (vals[:, 0] + 1j * vals[:, 1]).reshape(r, c, order="F")
            consts[s, k] = float(parts[4])
    return HierarchicalCodebook(big_s, big_k, n, mats, consts, kind)

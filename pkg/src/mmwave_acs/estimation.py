"""Adaptive hierarchical estimation of path angles and gains.

Three estimators share one stage loop:

* :func:`estimate_single_path` walks the codebook tree once, then refines
  among the grid angles covered by the winning final-level beams.
* :func:`estimate_multipath_sequential` repeats the walk per path and removes
  previously detected paths from every measurement, one path at a time, using
  their dictionary atoms.
* :func:`estimate_multipath_joint` removes all previous paths at once with a
  rank-one projection built from their steering vectors.
"""
from dataclasses import dataclass, field

import numpy as np

from .array import fold_angle, steering_vector
from .channel import measure
from .codebook import coverage_index_set
from .linalg import kron, pinv, unvec, vec


@dataclass
class StageTrace:
    level: int
    bs_subset: int
    ms_subset: int
    chosen_beam_bs: int
    chosen_beam_ms: int
    measurement_power: np.ndarray

    def as_record(self):
        return {
            "level": self.level,
            "bs_subset": self.bs_subset,
            "ms_subset": self.ms_subset,
            "chosen_beam_bs": self.chosen_beam_bs,
            "chosen_beam_ms": self.chosen_beam_ms,
            "measurement_power": self.measurement_power.tolist(),
        }


@dataclass
class EstimateResult:
    aod: float
    aoa: float
    gain_magnitude: float
    trace: list = field(default_factory=list)
    candidates_aod: np.ndarray = None
    candidates_aoa: np.ndarray = None
    aod_index: int = 0
    aoa_index: int = 0


@dataclass
class MultipathEstimate:
    paths: list
    index_bs: np.ndarray
    index_ms: np.ndarray
    # beam-selection feedback per stage and link direction
    feedback_bits_per_stage: float = 0.0


def feedback_bits(big_k):
    """Bits needed to report one of ``K`` beams back to the other side."""
    return float(np.log2(big_k))


def _check_codebooks(h, fcb, wcb):
    if (fcb.levels, fcb.branching, fcb.num_grid) != (wcb.levels, wcb.branching, wcb.num_grid):
        raise ValueError("transmit and receive codebooks must share (S, K, N)")
    if fcb.num_antennas != h.n_bs or wcb.num_antennas != h.n_ms:
        raise ValueError(
            f"codebooks sized for {fcb.num_antennas}x{wcb.num_antennas} antennas, "
            f"channel is {h.n_bs}x{h.n_ms}")


def _argmax_power(power):
    # np.argmax scans row-major: ties go to the smallest (m_ms, m_bs).
    i = int(np.argmax(power))
    return divmod(i, power.shape[1])


class _Projector:
    """Removes previously detected paths from a measurement ``W^H H F``."""

    def apply(self, y, f, w):
        return y


class _AtomProjector(_Projector):
    """Sequential per-path projection onto dictionary atoms."""

    def __init__(self, bs_dict, ms_dict, detected):
        self.bs_dict = bs_dict
        self.ms_dict = ms_dict
        self.detected = detected

    def apply(self, y, f, w):
        rows, cols = y.shape
        yv = vec(y)
        for est in self.detected:
            a_bs = self.bs_dict.atoms[:, self.bs_dict.columns_for(est.aod_index)]
            a_ms = self.ms_dict.atoms[:, self.ms_dict.columns_for(est.aoa_index)]
            v = kron(f.T @ a_bs.conj(), w.conj().T @ a_ms)
            yv = yv - v @ (pinv(v) @ yv)
        return unvec(yv, rows, cols)


class _JointProjector(_Projector):
    """Rank-one projection using the summed steering-vector contribution."""

    def __init__(self, bs, ms, detected):
        self.a_bs = steering_vector(bs, [e.aod for e in detected])
        self.a_ms = steering_vector(ms, [e.aoa for e in detected])

    def apply(self, y, f, w):
        v = vec(w.conj().T @ self.a_ms @ self.a_bs.conj().T @ f)
        energy = float(np.vdot(v, v).real)
        if energy == 0.0:
            return y
        yv = vec(y)
        yv = yv - v * (np.vdot(v, yv) / energy)
        return unvec(yv, *y.shape)


def _walk(h, fcb, wcb, power, noise_var, rng, projector=None, previous_subsets=None):
    """Run the S measurement stages; return the trace and the final beams.

    ``previous_subsets`` is a list of per-stage ``(k_bs, k_ms)`` pairs from the
    preceding path; when given, those subsets are measured alongside the ones
    chosen in this walk and the overall strongest beam pair wins.
    """
    projector = projector or _Projector()
    big_k = fcb.branching
    k_bs = k_ms = 1
    trace = []
    for s in range(1, fcb.levels + 1):
        blocks = [(k_bs, k_ms)]
        if previous_subsets is not None and previous_subsets[s - 1] not in blocks:
            blocks.append(previous_subsets[s - 1])
        best = None
        for kb, km in blocks:
            f, w = fcb[s, kb], wcb[s, km]
            y = projector.apply(measure(h, f, w, power, noise_var, rng), f, w)
            pw = np.abs(y) ** 2
            mm, mb = _argmax_power(pw)
            if best is None or pw[mm, mb] > best[0]:
                best = (pw[mm, mb], kb, km, mb, mm, pw)
        _, kb, km, mb, mm, pw = best
        trace.append(StageTrace(s, kb, km, mb + 1, mm + 1, pw))
        k_bs = big_k * (kb - 1) + mb + 1
        k_ms = big_k * (km - 1) + mm + 1
    return trace


def _refine(h, fcb, trace, power, noise_var, rng):
    """Pick the best candidate grid angle pair covered by the final beams."""
    last = trace[-1]
    n, big_k, big_s = fcb.num_grid, fcb.branching, fcb.levels
    idx_bs = coverage_index_set(big_s, last.bs_subset, last.chosen_beam_bs, big_k, n, closed=True)
    idx_ms = coverage_index_set(big_s, last.ms_subset, last.chosen_beam_ms, big_k, n, closed=True)
    grid = 2.0 * np.pi * np.arange(n) / n
    a_bs = steering_vector(h.bs, grid[idx_bs])
    a_ms = steering_vector(h.ms, grid[idx_ms])
    z = measure(h, a_bs, a_ms, power, noise_var, rng)
    i, j = _argmax_power(np.abs(z) ** 2)
    u_bs = int(min(idx_bs[j], n - idx_bs[j]))
    u_ms = int(min(idx_ms[i], n - idx_ms[i]))
    scale = np.sqrt(power * h.n_bs * h.n_ms)
    gain = float(abs(z[i, j]) / scale) if scale > 0 else 0.0
    return EstimateResult(
        aod=float(fold_angle(grid[idx_bs[j]])),
        aoa=float(fold_angle(grid[idx_ms[i]])),
        gain_magnitude=gain,
        trace=trace,
        candidates_aod=fold_angle(grid[idx_bs]),
        candidates_aoa=fold_angle(grid[idx_ms]),
        aod_index=u_bs,
        aoa_index=u_ms,
    )


def estimate_single_path(h, fcb, wcb, dicts=None, power=1.0, noise_var=0.0, rng=None):
    """Adaptive single-path estimate of (AoD, AoA, |gain|).

    ``dicts`` is accepted for signature symmetry with the multipath
    estimators; the refinement step only needs the array geometry carried by
    ``h``.  Angles are reported folded onto [0, pi].
    """
    _check_codebooks(h, fcb, wcb)
    rng = rng if rng is not None else np.random.default_rng()
    trace = _walk(h, fcb, wcb, power, noise_var, rng)
    return _refine(h, fcb, trace, power, noise_var, rng)


def _multipath(h, fcb, wcb, num_paths, power, noise_var, rng, make_projector):
    _check_codebooks(h, fcb, wcb)
    if num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    if fcb.branching ** fcb.levels < num_paths:
        raise ValueError(
            f"{num_paths} paths exceed the {fcb.branching ** fcb.levels} final-level beams")
    rng = rng if rng is not None else np.random.default_rng()
    big_s = fcb.levels
    index_bs = np.zeros((num_paths, big_s), dtype=int)
    index_ms = np.zeros((num_paths, big_s), dtype=int)
    index_bs[:, 0] = index_ms[:, 0] = 1

    found = []
    for i in range(num_paths):
        if i == 0:
            projector, prev = None, None
        else:
            projector = make_projector(found)
            prev = list(zip(index_bs[i - 1], index_ms[i - 1]))
            prev = [(int(a), int(b)) for a, b in prev]
        trace = _walk(h, fcb, wcb, power, noise_var, rng, projector, prev)
        # the refinement round is a plain single-path measurement; no projection
        est = _refine(h, fcb, trace, power, noise_var, rng)
        index_bs[i] = [t.bs_subset for t in trace]
        index_ms[i] = [t.ms_subset for t in trace]
        found.append(est)
    return MultipathEstimate(found, index_bs, index_ms, feedback_bits(fcb.branching))


def estimate_multipath_sequential(h, fcb, wcb, dicts, num_paths, power=1.0, noise_var=0.0,
                                  rng=None):
    """Multipath estimate that projects out earlier paths one by one.

    ``dicts`` is the ``(bs_dictionary, ms_dictionary)`` pair whose atoms
    describe each detected path (steering atom, plus the derivative atom for
    CBP dictionaries).
    """
    bs_dict, ms_dict = dicts
    return _multipath(h, fcb, wcb, num_paths, power, noise_var, rng,
                      lambda found: _AtomProjector(bs_dict, ms_dict, found))


def estimate_multipath_joint(h, fcb, wcb, num_paths, power=1.0, noise_var=0.0, rng=None):
    """Multipath estimate that projects out all earlier paths simultaneously."""
    return _multipath(h, fcb, wcb, num_paths, power, noise_var, rng,
                      lambda found: _JointProjector(h.bs, h.ms, found))

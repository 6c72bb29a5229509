"""Monte Carlo experiments: error probability and spectral efficiency vs. SNR."""
import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from .array import UlaConfig, fold_angle, steering_vector
from .channel import PathSamplerConfig, noise_var_for_snr, sample_paths, synthesize_channel
from .codebook import (CBP, GRID, beam_pattern, build_cbp_dictionary, build_codebook,
                       build_grid_dictionary)
from .estimation import (EstimateResult, MultipathEstimate, estimate_multipath_joint,
                         estimate_multipath_sequential, estimate_single_path)
from .linalg import svd

log = logging.getLogger(__name__)

ALGORITHMS = ("single", "multipath-sequential", "multipath-joint")
CSV_COLUMNS = ("snr_db", "error_probability", "se_estimated_mean", "se_perfect_mean",
               "trials", "master_seed")
# recorded in metadata only; the narrowband model does not use them
CARRIER_HZ = 28e9
BANDWIDTH_HZ = 800e6


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n_bs: int = 64
    n_ms: int = 32
    big_k: int = 4
    big_s: int = 3
    dictionary_kind: str = CBP
    algorithm: str = "single"
    num_paths: int = 1
    snr_db_sweep: list = field(default_factory=lambda: [-10.0, 0.0, 10.0, 20.0])
    trials: int = 1000
    power: float = 1.0
    master_seed: int = 0
    output_path: str = "results.csv"
    gain_distribution: str = "complex-normal"
    angle_mode: str = "continuous-uniform"
    spacing_wavelengths: float = 0.5
    num_grid: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def grid_points(self):
        return 2 * self.big_k ** self.big_s

    def validate(self):
        if self.big_k < 2 or self.big_s < 1:
            raise ConfigError("need big_k >= 2 and big_s >= 1")
        if self.num_grid and self.num_grid != self.grid_points:
            raise ConfigError(
                f"num_grid={self.num_grid} but 2*K^S = {self.grid_points} for "
                f"K={self.big_k}, S={self.big_s}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.n_bs < 1 or self.n_ms < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.dictionary_kind not in (GRID, CBP):
            raise ConfigError(f"dictionary_kind must be 'grid' or 'cbp', not {self.dictionary_kind!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, not {self.algorithm!r}")
        if self.num_paths < 1:
            raise ConfigError("num_paths must be >= 1")
        if self.gain_distribution not in ("unit-gain", "complex-normal"):
            raise ConfigError(f"unknown gain_distribution {self.gain_distribution!r}")
        if self.angle_mode not in ("continuous-uniform", "on-grid"):
            raise ConfigError(f"unknown angle_mode {self.angle_mode!r}")
        if self.algorithm == "single" and self.num_paths != 1:
            log.warning("single-path estimator on a %d-path channel", self.num_paths)
        if self.big_k ** self.big_s < self.num_paths:
            raise ConfigError("more paths than final-level beams")
        if not self.snr_db_sweep:
            raise ConfigError("snr_db_sweep is empty")
        if self.power < 0:
            raise ConfigError("power must be >= 0")


@dataclass
class TrialOutcome:
    snr_db: float
    trial_id: int
    angle_error: bool
    se_estimated: float
    se_perfect: float


@dataclass
class SnrPoint:
    snr_db: float
    error_probability: float
    se_estimated_mean: float
    se_perfect_mean: float
    trials: int
    master_seed: int
    se_estimated_std: float = 0.0
    se_perfect_std: float = 0.0

    @property
    def error_stderr(self):
        p = self.error_probability
        return float(np.sqrt(p * (1 - p) / self.trials))


# --- scoring ---------------------------------------------------------------

def _estimated_paths(estimate):
    if isinstance(estimate, MultipathEstimate):
        return list(estimate.paths)
    if isinstance(estimate, EstimateResult):
        return [estimate]
    return list(estimate)


def angle_error(estimate, truth, big_k, big_s):
    """True when any of the L strongest true paths is missed.

    A true path counts as found when the estimate greedily matched to it is
    within half a final grid spacing, ``pi / (2 K^S)``, in both folded AoD and
    folded AoA.
    """
    if not truth:
        raise ValueError("truth must contain at least one path")
    est = _estimated_paths(estimate)
    strongest = sorted(truth, key=lambda p: -abs(p.gain))[:len(est)]
    true_ang = [(fold_angle(p.aod_az), fold_angle(p.aoa_az)) for p in strongest]
    threshold = np.pi / (2 * big_k ** big_s) * (1 + 1e-9)
    unmatched = set(range(len(true_ang)))
    errs = {}
    for e in est:
        if not unmatched:
            break
        j = min(unmatched, key=lambda t: max(abs(e.aod - true_ang[t][0]),
                                              abs(e.aoa - true_ang[t][1])))
        unmatched.discard(j)
        errs[j] = (abs(e.aod - true_ang[j][0]), abs(e.aoa - true_ang[j][1]))
    for j in range(len(true_ang)):
        if j not in errs or max(errs[j]) > threshold:
            return True
    return False


def spectral_efficiency(h_true, h_hat, n_streams, snr_linear):
    """Eigen-beamforming rate with beams taken from ``h_hat``.

    ``snr_linear`` is transmit power over noise variance; power is split
    equally across ``n_streams``.
    """
    h_true = np.asarray(h_true, dtype=complex)
    h_hat = np.asarray(h_hat, dtype=complex)
    if not 1 <= n_streams <= min(h_true.shape):
        raise ValueError(f"n_streams={n_streams} outside 1..{min(h_true.shape)}")
    u, _, v = svd(h_hat)
    w, f = u[:, :n_streams], v[:, :n_streams]
    he = w.conj().T @ h_true @ f
    m = np.eye(n_streams) + (snr_linear / n_streams) * (he @ he.conj().T)
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet / np.log(2.0))


def reconstruct_channel(estimate, bs, ms, num_paths=None):
    """Channel rebuilt from estimated angles and gain magnitudes (zero phase)."""
    est = _estimated_paths(estimate)
    if not est:
        raise ValueError("estimate has no paths")
    num_paths = num_paths or len(est)
    gains = np.array([e.gain_magnitude for e in est])
    a_bs = steering_vector(bs, [e.aod for e in est])
    a_ms = steering_vector(ms, [e.aoa for e in est])
    scale = np.sqrt(bs.num_elements * ms.num_elements / num_paths)
    return scale * (a_ms * gains) @ a_bs.conj().T


# --- experiment ------------------------------------------------------------

def trial_rng(master_seed, snr_index, trial_id):
    """Independent stream keyed by (master_seed, snr_index, trial_id)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(snr_index, trial_id))
    return np.random.default_rng(seq)


@lru_cache(maxsize=32)
def _setup(n_ant, spacing, big_k, big_s, kind):
    cfg = UlaConfig(n_ant, spacing)
    n = 2 * big_k ** big_s
    d = build_cbp_dictionary(cfg, n) if kind == CBP else build_grid_dictionary(cfg, n)
    return cfg, d, build_codebook(d, big_s, big_k)


def setup_codebooks(cfg):
    """Return ``(bs_cfg, ms_cfg, (bs_dict, ms_dict), fcb, wcb)`` for a config."""
    bs, bs_dict, fcb = _setup(cfg.n_bs, cfg.spacing_wavelengths, cfg.big_k, cfg.big_s,
                              cfg.dictionary_kind)
    ms, ms_dict, wcb = _setup(cfg.n_ms, cfg.spacing_wavelengths, cfg.big_k, cfg.big_s,
                              cfg.dictionary_kind)
    return bs, ms, (bs_dict, ms_dict), fcb, wcb


def estimate(cfg, channel, power, noise_var, rng):
    bs, ms, dicts, fcb, wcb = setup_codebooks(cfg)
    if cfg.algorithm == "single":
        return estimate_single_path(channel, fcb, wcb, dicts, power, noise_var, rng)
    if cfg.algorithm == "multipath-sequential":
        return estimate_multipath_sequential(channel, fcb, wcb, dicts, cfg.num_paths, power,
                                             noise_var, rng)
    return estimate_multipath_joint(channel, fcb, wcb, cfg.num_paths, power, noise_var, rng)


def run_trial(cfg, snr_index, trial_id):
    snr_db = float(cfg.snr_db_sweep[snr_index])
    rng = trial_rng(cfg.master_seed, snr_index, trial_id)
    bs, ms, *_ = setup_codebooks(cfg)
    sampler = PathSamplerConfig(cfg.num_paths, cfg.gain_distribution, cfg.angle_mode,
                                cfg.grid_points, cfg.master_seed)
    channel = synthesize_channel(sample_paths(sampler, rng), bs, ms)
    noise_var = noise_var_for_snr(channel, cfg.power, 10.0 ** (snr_db / 10.0))
    est = estimate(cfg, channel, cfg.power, noise_var, rng)
    n_est = len(_estimated_paths(est))
    h_hat = reconstruct_channel(est, bs, ms, n_est)
    snr_tx = cfg.power / noise_var
    return TrialOutcome(
        snr_db=snr_db,
        trial_id=trial_id,
        angle_error=angle_error(est, channel.paths, cfg.big_k, cfg.big_s),
        se_estimated=spectral_efficiency(channel.h, h_hat, n_est, snr_tx),
        se_perfect=spectral_efficiency(channel.h, channel.h, n_est, snr_tx),
    )


def _run_chunk(args):
    cfg, jobs = args
    return [run_trial(cfg, i, t) for i, t in jobs]


def run_experiment(cfg, workers=None):
    """Run every (SNR, trial) pair and aggregate one :class:`SnrPoint` per SNR.

    With ``workers > 1`` trials are spread over processes; results are
    identical to a serial run because every trial owns its RNG stream.
    """
    workers = cfg.workers if workers is None else workers
    jobs = [(i, t) for i in range(len(cfg.snr_db_sweep)) for t in range(cfg.trials)]
    if workers > 1:
        chunks = [jobs[c::workers] for c in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            outcomes = [o for part in pool.map(_run_chunk, [(cfg, c) for c in chunks])
                        for o in part]
    else:
        outcomes = _run_chunk((cfg, jobs))

    by_snr = {}
    for o in outcomes:
        by_snr.setdefault(o.snr_db, {})[o.trial_id] = o
    table = []
    for snr_db in sorted(by_snr):
        rows = [by_snr[snr_db][t] for t in sorted(by_snr[snr_db])]
        err = np.array([r.angle_error for r in rows], dtype=float)
        se_est = np.array([r.se_estimated for r in rows])
        se_perf = np.array([r.se_perfect for r in rows])
        table.append(SnrPoint(
            snr_db=snr_db,
            error_probability=float(err.mean()),
            se_estimated_mean=float(se_est.mean()),
            se_perfect_mean=float(se_perf.mean()),
            trials=len(rows),
            master_seed=cfg.master_seed,
            se_estimated_std=float(se_est.std(ddof=1)) if len(rows) > 1 else 0.0,
            se_perfect_std=float(se_perf.std(ddof=1)) if len(rows) > 1 else 0.0,
        ))
    return table


def table_to_csv(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in table:
        writer.writerow([repr(p.snr_db), repr(p.error_probability), repr(p.se_estimated_mean),
                         repr(p.se_perfect_mean), p.trials, p.master_seed])
    return buf.getvalue()


def write_results(cfg, table, path=None):
    path = path or cfg.output_path
    with open(path, "w", newline="") as fh:
        fh.write(table_to_csv(table))
    meta = {"config": asdict(cfg), "carrier_hz": CARRIER_HZ, "bandwidth_hz": BANDWIDTH_HZ}
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return path


# --- beam patterns ---------------------------------------------------------

def beam_pattern_rows(cb, cfg, resolution, level=1, subset=1):
    """Rows of ``(angle, |f_1^H a|, ..., |f_K^H a|)`` over ``[0, 2pi)``."""
    if resolution < cb.num_grid:
        raise ValueError(f"resolution {resolution} below grid size {cb.num_grid}")
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    mags = beam_pattern(cb[level, subset], cfg, angles)
    return np.column_stack([angles, mags])


def emit_beam_patterns(cb, cfg, resolution, path=None, prefix="beam"):
    rows = beam_pattern_rows(cb, cfg, resolution)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["angle"] + [f"{prefix}_{m + 1}" for m in range(cb.branching)])
    for r in rows:
        writer.writerow([repr(float(x)) for x in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def trace_records(estimate):
    """JSON-serializable per-stage records for every detected path."""
    out = []
    for i, e in enumerate(_estimated_paths(estimate)):
        for st in e.trace:
            rec = {"path": i + 1}
            rec.update(st.as_record())
            out.append(rec)
        out.append({"path": i + 1, "aod": e.aod, "aoa": e.aoa,
                    "gain_magnitude": e.gain_magnitude})
    return out


# --- config files ----------------------------------------------------------

def _coerce(name, raw):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    default = ExperimentConfig.__dataclass_fields__[name]
    sample = default.default_factory() if callable(default.default_factory) else default.default
    try:
        if isinstance(sample, list):
            return [float(x) for x in str(raw).replace(",", " ").split()]
        if isinstance(sample, bool):
            return str(raw).lower() in ("1", "true", "yes")
        if isinstance(sample, int):
            return int(raw)
        if isinstance(sample, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return str(raw)


def parse_config_text(text):
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def make_config(base=None, **overrides):
    values = dict(base or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

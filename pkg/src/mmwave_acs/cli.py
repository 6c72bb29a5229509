"""Command line entry point: ``python -m mmwave_acs {run,sweep,patterns,trace}``."""
import argparse
import itertools
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import sim
from .channel import PathSamplerConfig, noise_var_for_snr, sample_paths, synthesize_channel
from .codebook import CBP, GRID

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _add_config_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    for f in sim.ExperimentConfig.__dataclass_fields__.values():
        p.add_argument(f"--{f.name}", dest=f.name, default=None)


def _load_config(args):
    base = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise sim.ConfigError(f"cannot read config file: {exc}") from exc
        base = sim.parse_config_text(text)
    overrides = {}
    for name in sim.ExperimentConfig.__dataclass_fields__:
        raw = getattr(args, name, None)
        if raw is not None:
            overrides[name] = sim._coerce(name, raw)
    return sim.make_config(base, **overrides)


def cmd_run(args):
    cfg = _load_config(args)
    table = sim.run_experiment(cfg)
    sim.write_results(cfg, table)
    for p in table:
        logging.info("snr=%g dB  P_err=%.4f  SE=%.3f  SE_perfect=%.3f", p.snr_db,
                     p.error_probability, p.se_estimated_mean, p.se_perfect_mean)


def cmd_sweep(args):
    cfg = _load_config(args)
    kinds = args.kinds.split(",")
    algos = args.algorithms.split(",")
    stem = Path(cfg.output_path)
    for kind, algo in itertools.product(kinds, algos):
        sub = replace(cfg, dictionary_kind=kind, algorithm=algo,
                      output_path=str(stem.with_name(f"{stem.stem}_{kind}_{algo}{stem.suffix}")))
        sub.validate()
        sim.write_results(sub, sim.run_experiment(sub))
        logging.info("wrote %s", sub.output_path)


def cmd_patterns(args):
    cfg = _load_config(args)
    columns, angles = [], None
    for kind in (GRID, CBP):
        sub = replace(cfg, dictionary_kind=kind)
        bs, _, _, fcb, _ = sim.setup_codebooks(sub)
        rows = sim.beam_pattern_rows(fcb, bs, args.resolution)
        angles = rows[:, 0]
        columns.append((kind, rows[:, 1:]))
    header = ["angle"] + [f"{kind}_beam_{m + 1}" for kind, mags in columns
                          for m in range(mags.shape[1])]
    data = np.column_stack([angles] + [mags for _, mags in columns])
    with open(cfg.output_path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in data:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")


def cmd_trace(args):
    cfg = _load_config(args)
    rng = sim.trial_rng(cfg.master_seed, 0, args.trial)
    bs, ms, *_ = sim.setup_codebooks(cfg)
    sampler = PathSamplerConfig(cfg.num_paths, cfg.gain_distribution, cfg.angle_mode,
                                cfg.grid_points, cfg.master_seed)
    channel = synthesize_channel(sample_paths(sampler, rng), bs, ms)
    snr = 10.0 ** (cfg.snr_db_sweep[0] / 10.0)
    noise_var = noise_var_for_snr(channel, cfg.power, snr)
    est = sim.estimate(cfg, channel, cfg.power, noise_var, rng)
    out = sys.stdout if cfg.output_path == "-" else open(cfg.output_path, "w")
    try:
        for rec in sim.trace_records(est):
            out.write(json.dumps(rec) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def build_parser():
    parser = argparse.ArgumentParser(prog="mmwave-acs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every dictionary kind x algorithm")
    _add_config_flags(p)
    p.add_argument("--kinds", default="grid,cbp")
    p.add_argument("--algorithms", default="single")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("patterns", help="level-1 beam patterns, grid and CBP side by side")
    _add_config_flags(p)
    p.add_argument("--resolution", type=int, default=1024)
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("trace", help="JSON-lines stage trace for a single trial")
    _add_config_flags(p)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except sim.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK

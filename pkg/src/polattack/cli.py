"""Command-line front end. Every command writes CSV.

Failures print one line to stderr, ``error: code=<CODE> message=<text>``,
and exit with status 1 (argument errors exit with 2, as argparse does).
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import figures
from .attack import plan_attack
from .config import ExperimentConfig, load_config, parse_float_list
from .core_model import ChannelParams, DistanceModel, ProtocolParams, distance_to_transmittance
from .errors import ConfigError, DomainError, PolAttackError
from .estimation import CSV_FIELDS, MIN_MC_SAMPLES, attacked_estimates_paper, estimate_row, monte_carlo_attacked_run
from .keyrate import chi_total, holevo_bound, mutual_information, secret_key_rate, tolerable_excess_noise
from .lo_pulse_train import (
    CompensationConfig,
    compensate,
    cycle_corrections,
    identify_reference_pulses,
    inject_attack,
    make_probe_oracle,
    make_train,
    probe_bound,
)

SEED_ENV = "POLATTACK_SEED"
NAN = float("nan")


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if v == 0:
            return "0"
        return f"{v:.12g}"
    return str(v)


def write_csv(out, header, rows):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])


def _common(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help=f"master seed (default: config, then ${SEED_ENV}, then 0)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--va", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--k", type=float, help="polarization measurement ratio M/N")
    parser.add_argument("--theta-deg", type=float)
    parser.add_argument("--distance-km", type=float)
    parser.add_argument("--transmittance", type=float, help="overrides --distance-km")
    parser.add_argument("--eps", type=float, help="practical (introduced) excess noise")
    parser.add_argument("--eps-target", type=float)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--malus-convention", choices=("paper", "squared"))


def build_parser():
    parser = argparse.ArgumentParser(prog="polattack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("snu-curve", help="practical SNU vs LO orientation angle")
    _common(p)
    p.add_argument("--angles-deg", help="comma list or start:stop:step")

    p = sub.add_parser("figure", help="distance sweeps (3: noise, 4: key rates, 5: angle, 6: T ratio)")
    _common(p)
    p.add_argument("--fig", type=int, required=True, choices=sorted(figures.FIGURES))

    p = sub.add_parser("simulate", help="Monte Carlo attacked run + honest estimator")
    _common(p)
    p.add_argument("--combine", choices=("pooled", "per_sample"), default="pooled")

    p = sub.add_parser("plan", help="orientation angle hiding the introduced noise")
    _common(p)

    p = sub.add_parser("keyrate", help="asymptotic reverse-reconciliation key rate")
    _common(p)

    p = sub.add_parser("identify", help="recover the reference pulse positions by group testing")
    _common(p)
    p.add_argument("--cycle-length", type=int)
    p.add_argument("--reference-count", type=int)
    p.add_argument("--placement", choices=("first", "spread", "random"))
    p.add_argument("--blind", action="store_true", help="do not tell the search how many references exist")

    p = sub.add_parser("compensate", help="pulse-train compensation with Eve's injection")
    _common(p)
    p.add_argument("--cycle-length", type=int)
    p.add_argument("--reference-count", type=int)
    p.add_argument("--n-cycles", type=int)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    seed = args.seed
    if seed is None and not args.config and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"${SEED_ENV} is not an integer") from exc
    over = dict(seed=seed, va=args.va, beta=args.beta, eps_target=args.eps_target,
                samples=args.samples, workers=args.workers, malus_convention=args.malus_convention)
    if args.k is not None:
        over["pmr"] = args.k
        over["pmr_list"] = (args.k,)
    if getattr(args, "angles_deg", None):
        over["angles_deg"] = parse_float_list(args.angles_deg)
    for name in ("cycle_length", "reference_count", "n_cycles"):
        if getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    return cfg.with_overrides(**over)


def _transmittance(args, cfg):
    if args.transmittance is not None:
        return args.transmittance, NAN
    d = args.distance_km if args.distance_km is not None else 0.0
    return distance_to_transmittance(d, DistanceModel(cfg.loss_db_per_km)), d


def cmd_snu_curve(args, cfg):
    return figures.snu_curve(cfg)


def cmd_figure(args, cfg):
    return figures.FIGURES[args.fig](cfg)


def cmd_simulate(args, cfg):
    if cfg.samples < MIN_MC_SAMPLES:
        raise ConfigError(f"Monte Carlo commands need samples >= {MIN_MC_SAMPLES}")
    t, _ = _transmittance(args, cfg)
    eps = args.eps if args.eps is not None else 0.0
    theta = math.radians(args.theta_deg) if args.theta_deg is not None else 0.0
    theta = min(theta, math.pi / 2)
    est = monte_carlo_attacked_run(ProtocolParams(cfg.va, cfg.beta), ChannelParams(t, eps), theta,
                                   cfg.pmr, cfg.samples, cfg.seed, args.combine,
                                   cfg.malus_convention, cfg.workers)
    row = estimate_row(est, theta, cfg.pmr, cfg.seed)
    return CSV_FIELDS, [tuple(row[f] for f in CSV_FIELDS)]


def cmd_plan(args, cfg):
    t, d = _transmittance(args, cfg)
    eps = args.eps if args.eps is not None else tolerable_excess_noise(cfg.va, cfg.beta, t)
    theta = plan_attack(t, eps, cfg.eps_target, cfg.pmr, cfg.malus_convention)
    t_est, eps_est = attacked_estimates_paper(t, eps, theta, cfg.pmr, cfg.malus_convention)
    header = ("distance_km", "transmittance", "eps_intro", "eps_target", "k", "theta_rad", "theta_deg",
              "t_estimated", "eps_estimated")
    return header, [(d, t, eps, cfg.eps_target, cfg.pmr, theta, math.degrees(theta), t_est, eps_est)]


def cmd_keyrate(args, cfg):
    t, d = _transmittance(args, cfg)
    eps = args.eps if args.eps is not None else cfg.eps_target
    rate = secret_key_rate(cfg.va, cfg.beta, t, eps)
    info = mutual_information(cfg.va, chi_total(t, eps))
    header = ("va", "beta", "distance_km", "transmittance", "eps", "mutual_info", "holevo", "key_rate")
    return header, [(cfg.va, cfg.beta, d, t, eps, info, holevo_bound(cfg.va, t, eps), rate)]


def _compensation_config(cfg, placement=None, seed=0):
    positions = None
    if placement == "random":
        rng = np.random.default_rng(seed)
        positions = tuple(sorted(rng.choice(cfg.cycle_length, cfg.reference_count, replace=False).tolist()))
        placement = "first"
    return CompensationConfig(
        cycle_length=cfg.cycle_length, reference_count=cfg.reference_count,
        drift_threshold=cfg.drift_threshold, drift_rate=cfg.drift_rate,
        repetition_rate=cfg.repetition_rate, drift_mode=cfg.drift_mode,
        placement=placement or cfg.placement, reference_positions=positions)


def cmd_identify(args, cfg):
    comp = _compensation_config(cfg, args.placement, cfg.seed)
    train = make_train(3, comp, cfg.seed)
    oracle = make_probe_oracle(train, comp)
    calls = []

    def counted(subset):
        calls.append(1)
        return oracle(subset)

    found = identify_reference_pulses(counted, comp.cycle_length, None if args.blind else comp.reference_count)
    truth = train.reference_set(0)
    header = ("cycle_length", "reference_count", "probes", "probe_bound", "correct", "reference_indices")
    return header, [(comp.cycle_length, comp.reference_count, len(calls),
                     probe_bound(comp.cycle_length, comp.reference_count), int(found == truth),
                     " ".join(str(i) for i in sorted(found)))]


def cmd_compensate(args, cfg):
    comp = _compensation_config(cfg)
    train = make_train(cfg.n_cycles, comp, cfg.seed)
    attack_angle = math.radians(cfg.attack_angle_deg)
    attacked = inject_attack(train, comp, attack_angle, cfg.attack_start_cycle)
    corrections = cycle_corrections(attacked, comp)
    _, residual = compensate(attacked, comp)
    n = comp.cycle_length
    header = ("cycle", "correction", "max_abs_reference_residual", "max_abs_unmeasured_residual", "attacked")
    rows = []
    for j in range(attacked.n_cycles):
        sl = slice(j * n, (j + 1) * n)
        ref = attacked.reference_mask[sl]
        r = np.abs(residual[sl])
        unmeasured = float(r[~ref].max()) if (~ref).any() else NAN
        rows.append((j, corrections[j], float(r[ref].max()), unmeasured, int(j >= cfg.attack_start_cycle)))
    return header, rows


COMMANDS = {
    "snu-curve": cmd_snu_curve,
    "figure": cmd_figure,
    "simulate": cmd_simulate,
    "plan": cmd_plan,
    "keyrate": cmd_keyrate,
    "identify": cmd_identify,
    "compensate": cmd_compensate,
}


def _error_line(code, exc):
    msg = " ".join(str(exc).split())
    return f"error: code={code} message={msg}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        header, rows = COMMANDS[args.command](args, cfg)
    except PolAttackError as exc:
        print(_error_line(exc.code, exc), file=sys.stderr)
        return 1
    except (ValueError, ZeroDivisionError) as exc:
        print(_error_line(DomainError.code, exc), file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, header, rows)
    else:
        write_csv(sys.stdout, header, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())

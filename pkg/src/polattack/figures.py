"""Tabular reproductions of the shot-noise curve and the distance sweeps.

Every builder returns ``(header, rows)`` with rows as tuples, ready for CSV.
Planner points that Eve cannot reach at the given PMR are kept and flagged in
an ``infeasible`` column.
"""
from __future__ import annotations

import math

import numpy as np

from .attack import attacked_samples, intensity_factor, max_attack_estimates, plan_attack
from .config import ExperimentConfig
from .core_model import ChannelParams, DistanceModel, distance_to_transmittance
from .errors import InfeasibleAttackError, NoPositiveRateError
from .estimation import attacked_estimates_paper
from .keyrate import secret_key_rate, tolerable_excess_noise

NAN = float("nan")


def snu_curve(cfg: ExperimentConfig):
    """Normalized practical SNU vs LO orientation angle, analytic and sampled.

    The Monte Carlo column is the sample variance of vacuum-input homodyne
    output measured with the rotated LO and normalized by the calibrated SNU.
    """
    header = ("theta_deg", "snu_normalized", "mc_variance", "mc_se")
    rows = []
    vacuum = ChannelParams(1.0, 0.0)
    zeros = np.zeros(cfg.samples)
    for i, deg in enumerate(cfg.angles_deg):
        theta = min(math.radians(deg), math.pi / 2)
        analytic = intensity_factor(theta, cfg.malus_convention)
        x = attacked_samples(zeros, vacuum, theta, cfg.seed + i, cfg.malus_convention, cfg.workers)
        var = float(np.var(x, ddof=1))
        rows.append((deg, analytic, var, var * math.sqrt(2.0 / (cfg.samples - 1))))
    return header, rows


class _Point:
    """Tolerable noise and the planned attack at one distance and PMR."""

    def __init__(self, cfg, distance, k):
        self.distance = distance
        self.k = k
        self.t = distance_to_transmittance(distance, DistanceModel(cfg.loss_db_per_km))
        try:
            self.eps_tol = tolerable_excess_noise(cfg.va, cfg.beta, self.t)
        except NoPositiveRateError:
            self.eps_tol = NAN
        self.infeasible = math.isnan(self.eps_tol)
        self.theta = NAN
        self.t_est = self.eps_est = NAN
        if self.infeasible:
            return
        try:
            self.theta = plan_attack(self.t, self.eps_tol, cfg.eps_target, k, cfg.malus_convention)
            self.t_est, self.eps_est = attacked_estimates_paper(
                self.t, self.eps_tol, self.theta, k, cfg.malus_convention)
        except InfeasibleAttackError:
            self.infeasible = True
            if k > 0:
                self.t_est, self.eps_est = max_attack_estimates(self.t, self.eps_tol, k)


def figure3(cfg: ExperimentConfig):
    header = ("distance_km", "transmittance", "eps_tolerable", "eps_reported", "k", "theta_rad", "infeasible")
    rows = []
    for d in cfg.distances_km:
        p = _Point(cfg, d, cfg.pmr)
        rows.append((d, p.t, p.eps_tol, p.eps_est, p.k, p.theta, int(p.infeasible)))
    return header, rows


def figure4(cfg: ExperimentConfig):
    header = ("distance_km", "k_ideal_rate", "k_eve_rate", "ratio", "infeasible")
    rows = []
    for d in cfg.distances_km:
        p = _Point(cfg, d, cfg.pmr)
        ideal = secret_key_rate(cfg.va, cfg.beta, p.t, cfg.eps_target)
        eve = NAN
        if not math.isnan(p.t_est):
            try:
                eve = secret_key_rate(cfg.va, cfg.beta, p.t_est, p.eps_est)
            except ValueError:
                eve = NAN
        rows.append((d, ideal, eve, eve / ideal, int(p.infeasible)))
    return header, rows


def figure5(cfg: ExperimentConfig):
    header = ("distance_km", "k", "theta_rad", "theta_deg", "infeasible")
    rows = []
    for k in cfg.pmr_list:
        for d in cfg.distances_km:
            p = _Point(cfg, d, k)
            rows.append((d, k, p.theta, math.degrees(p.theta), int(p.infeasible)))
    return header, rows


def figure6(cfg: ExperimentConfig):
    header = ("distance_km", "k", "t_ratio", "infeasible")
    rows = []
    for k in cfg.pmr_list:
        for d in cfg.distances_km:
            p = _Point(cfg, d, k)
            rows.append((d, k, p.t_est / p.t, int(p.infeasible)))
    return header, rows


FIGURES = {3: figure3, 4: figure4, 5: figure5, 6: figure6}

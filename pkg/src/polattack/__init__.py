"""Simulation toolkit for the LO polarization attack on CV-QKD."""
from . import attack, core_model, estimation, keyrate, lo_pulse_train
from ._kernels import BACKEND
from .attack import (
    AttackParams,
    ShotNoiseModel,
    attacked_samples,
    calibrated_snu,
    malus_split,
    max_attack_estimates,
    plan_attack,
    practical_snu,
)
from .core_model import (
    ChannelParams,
    DistanceModel,
    ProtocolParams,
    QuadratureBatch,
    distance_to_transmittance,
    generate_alice_samples,
    simulate_round,
)
from .estimation import (
    ChannelEstimate,
    attacked_estimates_paper,
    attacked_estimates_pooled,
    estimate_channel,
    monte_carlo_attacked_run,
)
from .keyrate import secret_key_rate, tolerable_excess_noise

__version__ = "0.1.0"

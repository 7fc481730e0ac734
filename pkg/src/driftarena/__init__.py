"""driftarena: a desk-scale adversarial drift game for network intrusion detection.

A red agent learns byte-level packet perturbations that evade a traffic
classifier; a blue agent learns which drift-adaptation strategy restores
it.  The two alternate over sequential batches, each hardening against
the other's latest policy.
"""

from .traffic import (
    Batch,
    FeatureVector,
    RawPacket,
    SynthProfile,
    batch_split,
    parse_pcap,
    preprocess,
    synth_generate,
)
from .perturb import PacketView, PerturbAction, PerturbConfig, apply, recompute_checksums
from .nids import ClassifierModel, Metrics, entropy, evaluate, fit_initial, partial_fit, predict_proba
from .drift import AdaptationBudget, AdaptationOutcome, SeenStats, apply_adaptation
from .envs import BlueAdaptEnv, BlueEnvConfig, RedEnvConfig, RedEvasionEnv, blue_observe
from .agents import DqnAgent, EpisodeLog, PolicySpec, PpoAgent, train_loop
from .arena import GameConfig, RunReport, run_ablation, run_game

__version__ = "0.1.0"

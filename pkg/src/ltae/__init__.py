"""Autoencoding multichannel psychophysiological signals into 3-D latent trajectories."""

from .errors import LtaeError
from .linalg import pairwise_angles, polar_orthonormalize, svd
from .nn import NetworkSpec, Weights, autoencoder_spec, forward, init_weights
from .ortho import OrthoConfig, angular_penalty, check_convergence, epoch_orthonormalize
from .signal import (
    Recording,
    SynthesisSpec,
    common_mode_pattern,
    compute_stats,
    load_recording,
    normalize,
    save_recording,
    synthesize,
)
from .trainer import TrainConfig, TrainedModel, load_checkpoint, save_checkpoint, train
from .trajectory import (
    Trajectory,
    build_manifold,
    displacement,
    encode_sequence,
    kinematics,
    median_filter,
    separation,
    to_trajectory,
)

__version__ = "0.1.0"

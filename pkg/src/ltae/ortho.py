"""Angular orthogonality penalty on latent activations and per-epoch orthonormalization.

The penalty is ``sum_{i<j} cos^2(theta_ij)`` where ``theta_ij`` is the angle
between mean-centered latent columns ``i`` and ``j``. It vanishes exactly when
every pair is at 90 degrees.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLatentError, InsufficientDataError, ParameterError, RankError
from .linalg import pairwise_angles, polar_orthonormalize
from .nn import NetworkSpec, Weights

PAPER_TOLERANCE_DEG = 0.3
STRICT_TOLERANCE_DEG = 0.15
_MIN_NORM = 1e-12


@dataclass(frozen=True)
class OrthoConfig:
    tolerance_deg: float = PAPER_TOLERANCE_DEG
    penalty_weight: float = 1.0
    orthonormalize_each_epoch: bool = True

    def __post_init__(self):
        if not self.tolerance_deg > 0:
            raise ParameterError("tolerance_deg must be positive")
        if self.penalty_weight < 0:
            raise ParameterError("penalty_weight must be nonnegative")


@dataclass(frozen=True)
class AnglePenaltyReport:
    penalty: float
    angles_deg: np.ndarray
    max_deviation_deg: float

    def to_dict(self) -> dict:
        return {
            "penalty": self.penalty,
            "angles_deg": [float(a) for a in self.angles_deg],
            "max_deviation_deg": self.max_deviation_deg,
        }


def _unit_centered(Z) -> tuple[np.ndarray, np.ndarray]:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ParameterError("latent batch must be 2-D")
    if Z.shape[0] < 2:
        raise InsufficientDataError("angular penalty needs at least 2 rows")
    Zc = Z - Z.mean(axis=0)
    norms = np.linalg.norm(Zc, axis=0)
    if np.any(norms <= _MIN_NORM):
        raise DegenerateLatentError(
            f"latent dimension(s) {np.flatnonzero(norms <= _MIN_NORM).tolist()} have zero variance"
        )
    return Zc / norms, norms


def angular_penalty(Z) -> AnglePenaltyReport:
    U, _ = _unit_centered(Z)
    G = U.T @ U
    i, j = np.triu_indices(U.shape[1], k=1)
    penalty = float(np.sum(G[i, j] ** 2))
    angles = pairwise_angles(U)
    dev = float(np.max(np.abs(angles - 90.0))) if angles.size else 0.0
    return AnglePenaltyReport(penalty, angles, dev)


def penalty_and_gradient(Z) -> tuple[float, np.ndarray]:
    """Penalty value and its exact gradient with respect to every entry of ``Z``."""
    U, norms = _unit_centered(Z)
    G = U.T @ U
    off = G - np.diag(np.diag(G))
    penalty = 0.5 * float(np.sum(off * off))
    dU = 2.0 * U @ off
    # through column normalization, then through centering
    dZc = (dU - U * np.sum(U * dU, axis=0)) / norms
    return penalty, dZc - dZc.mean(axis=0)


def angular_penalty_gradient(Z) -> np.ndarray:
    return penalty_and_gradient(Z)[1]


def epoch_orthonormalize(w: Weights, spec: NetworkSpec) -> tuple[Weights, bool]:
    """Replace the latent layer's weight matrix by the nearest row-orthonormal matrix.

    Returns ``(weights, applied)``; when the matrix is rank deficient the
    weights come back unchanged with ``applied=False`` and a warning.
    """
    k = spec.latent_layer
    W = w.matrices[k]
    if W.shape[0] > W.shape[1]:
        raise ParameterError("latent layer has more outputs than inputs; rows cannot be orthonormal")
    try:
        Q = polar_orthonormalize(W.T).T
    except RankError as exc:
        warnings.warn(f"skipping orthonormalization: {exc}", stacklevel=2)
        return w, False
    out = Weights(list(w.matrices), list(w.biases))
    out.matrices[k] = Q
    return out, True


def check_convergence(report: AnglePenaltyReport, cfg: OrthoConfig) -> bool:
    return report.max_deviation_deg <= cfg.tolerance_deg

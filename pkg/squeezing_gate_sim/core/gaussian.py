"""
Gaussian states and Gaussian channels in quadrature ordering (x1, p1, x2, p2, ...)

Conventions: hbar = 1 and a = (x + ip)/sqrt(2), so the vacuum variance of each
quadrature is 1/2 and every dB figure is a ratio to that shot-noise level.
A channel is the affine pair (scale, noise) acting as

    cov -> scale @ cov @ scale.T + noise,    mean -> scale @ mean

which covers symplectic unitaries, loss and the lossy waveguide amplifier with
a single application path.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidArgumentError, PhysicalityError

logger = logging.getLogger(__name__)

VACUUM_VARIANCE = 0.5
SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-12

# eigen-solver floor, in units of eps * ||cov||
_ROUNDOFF_FACTOR = 64.0

ArrayLike = Union[float, Sequence[float], np.ndarray]


def symplectic_form(num_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for interleaved (x, p) ordering"""
    return np.kron(np.eye(num_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def physicality_tolerance(cov: np.ndarray) -> float:
    """Absolute tolerance on symplectic eigenvalues for a covariance of this size"""
    return PHYSICALITY_TOL + _ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.linalg.norm(cov, 2))


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")
    return value


def _require_unit_interval(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")
    return value


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    omega = symplectic_form(cov.shape[0] // 2)
    try:
        # i L^T omega L is Hermitian and similar to i omega cov
        factor = np.linalg.cholesky(cov)
        eigenvalues = np.linalg.eigvalsh(1j * (factor.T @ omega @ factor))
    except np.linalg.LinAlgError:
        if np.min(np.linalg.eigvalsh(cov)) < -physicality_tolerance(cov):
            return np.zeros(cov.shape[0] // 2)
        # positive semidefinite only to rounding: fall back to the non-symmetric problem
        eigenvalues = np.linalg.eigvals(omega @ cov)
    # eigenvalues come in pairs +-nu
    moduli = np.sort(np.abs(eigenvalues))
    return moduli[::2]


class Axis(Enum):
    X = "x"
    P = "p"


@dataclass(frozen=True)
class QuadratureSelector:
    mode: int
    axis: Axis

    def index(self, num_modes: int) -> int:
        if not 0 <= self.mode < num_modes:
            raise InvalidArgumentError(
                f"mode {self.mode} out of range for a {num_modes}-mode state"
            )
        return 2 * self.mode + (0 if self.axis is Axis.X else 1)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance matrix of an M-mode Gaussian state.

    Arrays are copied, symmetrised and made read-only on construction; a
    covariance that is asymmetric beyond 1e-12 or violates the uncertainty
    relation is rejected.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)

        if mean.size == 0 or mean.size % 2:
            raise InvalidArgumentError(f"mean must have even length 2M, got {mean.size}")
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidArgumentError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise InvalidArgumentError("cov is not symmetric")

        cov = (cov + cov.T) / 2
        nu_min = float(np.min(_symplectic_eigenvalues(cov)))
        if nu_min < VACUUM_VARIANCE - physicality_tolerance(cov):
            raise InvalidArgumentError(
                f"cov is unphysical: minimum symplectic eigenvalue {nu_min:.12g} < 1/2"
            )

        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def num_modes(self) -> int:
        return self.mean.size // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return _symplectic_eigenvalues(self.cov)

    def purity(self) -> float:
        return float(1.0 / np.sqrt(np.linalg.det(self.cov / VACUUM_VARIANCE)))

    def is_physical(self, tol: Optional[float] = None) -> bool:
        tol = physicality_tolerance(self.cov) if tol is None else tol
        return bool(np.min(self.symplectic_eigenvalues()) >= VACUUM_VARIANCE - tol)

    def validate(self, tol: Optional[float] = None) -> "GaussianState":
        if not self.is_physical(tol):
            raise PhysicalityError(
                f"state is unphysical: minimum symplectic eigenvalue {np.min(self.symplectic_eigenvalues()):.12g}"
            )
        return self

    def shot_normalized_variances(self, mode: int) -> Tuple[float, float]:
        """(x, p) variances of one mode in shot-noise units"""
        return (
            shot_normalized(variance(self, QuadratureSelector(mode, Axis.X))),
            shot_normalized(variance(self, QuadratureSelector(mode, Axis.P))),
        )

    def __repr__(self) -> str:
        return f"GaussianState(num_modes={self.num_modes})"


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Affine Gaussian map cov -> S cov S^T + N, mean -> S mean"""

    scale: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        scale = np.array(self.scale, dtype=float)
        noise = np.array(self.noise, dtype=float)

        if scale.ndim != 2 or scale.shape[0] != scale.shape[1] or scale.shape[0] % 2:
            raise InvalidArgumentError(f"scale must be a 2M x 2M matrix, got {scale.shape}")
        if noise.shape != scale.shape:
            raise InvalidArgumentError(
                f"noise shape {noise.shape} does not match scale shape {scale.shape}"
            )
        if not (np.all(np.isfinite(scale)) and np.all(np.isfinite(noise))):
            raise InvalidArgumentError("scale and noise must be finite")
        if np.max(np.abs(noise - noise.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(noise)))):
            raise InvalidArgumentError("noise is not symmetric")

        object.__setattr__(self, "scale", _frozen(scale))
        object.__setattr__(self, "noise", _frozen((noise + noise.T) / 2))

    @property
    def num_modes(self) -> int:
        return self.scale.shape[0] // 2

    def then(self, other: "GaussianChannel") -> "GaussianChannel":
        """Composition: apply self first, then other"""
        if other.num_modes != self.num_modes:
            raise InvalidArgumentError(
                f"cannot compose a {self.num_modes}-mode channel with a {other.num_modes}-mode channel"
            )
        return GaussianChannel(
            scale=other.scale @ self.scale,
            noise=other.scale @ self.noise @ other.scale.T + other.noise,
        )

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        omega = symplectic_form(self.num_modes)
        return bool(np.max(np.abs(self.scale @ omega @ self.scale.T - omega)) <= tol)

    def is_completely_positive(self, tol: float = PHYSICALITY_TOL) -> bool:
        omega = symplectic_form(self.num_modes)
        condition = self.noise + 0.5j * (omega - self.scale @ omega @ self.scale.T)
        floor = tol + _ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.linalg.norm(condition, 2))
        return bool(np.min(np.linalg.eigvalsh(condition)) >= -floor)

    def __repr__(self) -> str:
        return f"GaussianChannel(num_modes={self.num_modes})"


# --- states -----------------------------------------------------------------

def vacuum(num_modes: int) -> GaussianState:
    if int(num_modes) != num_modes or num_modes < 1:
        raise InvalidArgumentError(f"num_modes must be a positive integer, got {num_modes}")
    num_modes = int(num_modes)
    return GaussianState(
        mean=np.zeros(2 * num_modes),
        cov=VACUUM_VARIANCE * np.eye(2 * num_modes),
    )


def squeezed_vacuum(r: float) -> GaussianState:
    """Single-mode squeezed vacuum, x squeezed for r > 0"""
    r = _require_finite("r", r)
    return GaussianState(
        mean=np.zeros(2),
        cov=np.diag([VACUUM_VARIANCE * np.exp(-2 * r), VACUUM_VARIANCE * np.exp(2 * r)]),
    )


def thermal_state(nbar: float) -> GaussianState:
    nbar = _require_finite("nbar", nbar)
    if nbar < 0:
        raise InvalidArgumentError(f"nbar must be non-negative, got {nbar}")
    return GaussianState(mean=np.zeros(2), cov=(2 * nbar + 1) * VACUUM_VARIANCE * np.eye(2))


def marginal(state: GaussianState, mode: int) -> GaussianState:
    """Reduced single-mode state"""
    if not 0 <= mode < state.num_modes:
        raise InvalidArgumentError(f"mode {mode} out of range for a {state.num_modes}-mode state")
    block = slice(2 * mode, 2 * mode + 2)
    return GaussianState(mean=state.mean[block], cov=state.cov[block, block])


def tensor(first: GaussianState, second: GaussianState) -> GaussianState:
    """Product state with the modes of `first` before those of `second`"""
    return GaussianState(
        mean=np.concatenate([first.mean, second.mean]),
        cov=block_diag(first.cov, second.cov),
    )


# --- channels ---------------------------------------------------------------

def _resolve_num_modes(modes: Sequence[int], num_modes: Optional[int]) -> int:
    for mode in modes:
        if int(mode) != mode or mode < 0:
            raise InvalidArgumentError(f"mode index must be a non-negative integer, got {mode}")
    resolved = max(modes) + 1 if num_modes is None else int(num_modes)
    if max(modes) >= resolved:
        raise InvalidArgumentError(f"mode {max(modes)} out of range for {resolved} modes")
    return resolved


def embed(
    block_scale: np.ndarray,
    block_noise: np.ndarray,
    modes: Sequence[int],
    num_modes: Optional[int] = None,
) -> GaussianChannel:
    """Place a channel acting on `modes` into an M-mode identity"""
    num_modes = _resolve_num_modes(modes, num_modes)
    index = np.array([[2 * m, 2 * m + 1] for m in modes]).reshape(-1)

    scale = np.eye(2 * num_modes)
    noise = np.zeros((2 * num_modes, 2 * num_modes))
    scale[np.ix_(index, index)] = block_scale
    noise[np.ix_(index, index)] = block_noise
    return GaussianChannel(scale=scale, noise=noise)


def identity_channel(num_modes: int) -> GaussianChannel:
    return GaussianChannel(scale=np.eye(2 * num_modes), noise=np.zeros((2 * num_modes, 2 * num_modes)))


def beam_splitter_channel(
    T: float, mode_a: int, mode_b: int, num_modes: Optional[int] = None
) -> GaussianChannel:
    """Beam splitter with transmission T.

    a' = sqrt(1-T) a - sqrt(T) b,   b' = sqrt(T) a + sqrt(1-T) b,
    identically on the x and p blocks; mode_a is the "in" port, mode_b "anc".
    """
    T = _require_unit_interval("T", T)
    if mode_a == mode_b:
        raise InvalidArgumentError("beam splitter needs two distinct modes")

    t, s = np.sqrt(1 - T), np.sqrt(T)
    block = np.kron(np.array([[t, -s], [s, t]]), np.eye(2))
    return embed(block, np.zeros((4, 4)), [mode_a, mode_b], num_modes)


def ideal_opa_channel(G: float, mode: int, num_modes: Optional[int] = None) -> GaussianChannel:
    """Phase-sensitive amplifier with p power gain G: x -> x/sqrt(G), p -> sqrt(G) p"""
    G = _require_finite("G", G)
    if G < 1:
        raise InvalidArgumentError(f"OPA gain must be >= 1, got {G}")
    return embed(np.diag([1 / np.sqrt(G), np.sqrt(G)]), np.zeros((2, 2)), [mode], num_modes)


def loss_channel(eta: float, mode: int, num_modes: Optional[int] = None) -> GaussianChannel:
    """Pure attenuation with transmittance eta"""
    eta = _require_unit_interval("eta", eta)
    return embed(
        np.sqrt(eta) * np.eye(2),
        (1 - eta) * VACUUM_VARIANCE * np.eye(2),
        [mode],
        num_modes,
    )


def phase_rotation_channel(theta: float, mode: int, num_modes: Optional[int] = None) -> GaussianChannel:
    theta = _require_finite("theta", theta)
    c, s = np.cos(theta), np.sin(theta)
    return embed(np.array([[c, -s], [s, c]]), np.zeros((2, 2)), [mode], num_modes)


def apply(channel: GaussianChannel, state: GaussianState) -> GaussianState:
    if channel.num_modes != state.num_modes:
        raise InvalidArgumentError(
            f"{channel.num_modes}-mode channel applied to a {state.num_modes}-mode state"
        )

    mean = channel.scale @ state.mean
    cov = channel.scale @ state.cov @ channel.scale.T + channel.noise
    cov = (cov + cov.T) / 2

    nu_min = float(np.min(_symplectic_eigenvalues(cov)))
    if nu_min < VACUUM_VARIANCE - physicality_tolerance(cov):
        raise PhysicalityError(
            f"channel output is unphysical: minimum symplectic eigenvalue {nu_min:.12g}"
        )
    return GaussianState(mean=mean, cov=cov)


# --- readout ----------------------------------------------------------------

def variance(state: GaussianState, selector: QuadratureSelector) -> float:
    i = selector.index(state.num_modes)
    return float(state.cov[i, i])


def shot_normalized(v: ArrayLike) -> ArrayLike:
    return np.asarray(v, dtype=float) / VACUUM_VARIANCE if np.ndim(v) else float(v) / VACUUM_VARIANCE


def to_db(ratio: ArrayLike) -> ArrayLike:
    values = np.asarray(ratio, dtype=float)
    if not np.all(values > 0):
        raise InvalidArgumentError(f"dB conversion needs a positive ratio, got {ratio}")
    result = 10 * np.log10(values)
    return float(result) if result.ndim == 0 else result


def db_to_ratio(db: ArrayLike) -> ArrayLike:
    result = 10 ** (np.asarray(db, dtype=float) / 10)
    return float(result) if result.ndim == 0 else result


def squeezing_db_to_ratio(db: float) -> float:
    """Squeezing quoted as a magnitude: "3.6 dB" means 10^(-0.36)"""
    return float(10 ** (-abs(db) / 10))


def antisqueezing_db_to_ratio(db: float) -> float:
    return float(10 ** (abs(db) / 10))


def r_to_db(r: float) -> float:
    """Squeezed-quadrature level of a pure squeezer, 10 log10(exp(-2r))"""
    return float(10 * np.log10(np.exp(-2 * r)))


def db_to_r(db: float) -> float:
    return float(-0.5 * np.log(10 ** (db / 10)))

"""
Phase-sensitive parametric amplification in a lossy waveguide

The waveguide amplifies p with gain g per unit length while both quadratures
decay with extinction coefficient alpha. Integrating gain and loss along the
guide gives a closed-form Gaussian channel; the slice oracle rebuilds the same
channel from N short gain-then-loss segments.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleParametersError, InvalidArgumentError
from .gaussian import VACUUM_VARIANCE, GaussianChannel, embed, to_db

logger = logging.getLogger(__name__)

# below this |g - alpha| L the p-noise uses its Taylor expansion
SERIES_THRESHOLD = 1e-6


@dataclass(frozen=True)
class OpaSpec:
    """Waveguide amplifier: gain g and extinction alpha per metre, length L in metres"""

    g: float
    alpha: float
    L: float

    def __post_init__(self):
        for name in ("g", "alpha", "L"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidArgumentError(f"OpaSpec.{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.g < 0 or self.alpha < 0:
            raise InvalidArgumentError(f"g and alpha must be non-negative, got g={self.g}, alpha={self.alpha}")
        if self.L <= 0:
            raise InvalidArgumentError(f"L must be positive, got {self.L}")

    @property
    def gain(self) -> float:
        """Net p power gain exp(2 (g - alpha) L)"""
        return float(np.exp(2 * (self.g - self.alpha) * self.L))

    @property
    def gain_db(self) -> float:
        return 10 * 2 * (self.g - self.alpha) * self.L / np.log(10)


@dataclass(frozen=True)
class OpaGainLoss:
    """Amplifier quoted the way it is measured: gain in dB and effective propagation loss"""

    gain_db: float
    effective_loss: float

    def __post_init__(self):
        if not np.isfinite(self.gain_db):
            raise InvalidArgumentError(f"gain_db must be finite, got {self.gain_db}")
        if not 0.0 <= self.effective_loss < 1.0:
            raise InvalidArgumentError(f"effective_loss must lie in [0, 1), got {self.effective_loss}")


def _growth_integral(spec: OpaSpec) -> float:
    """(exp(2uL) - 1)/(g - alpha) with u = g - alpha; equals 2L at g = alpha"""
    u = (spec.g - spec.alpha) * spec.L
    if abs(u) < SERIES_THRESHOLD:
        return 2 * spec.L * (1 + u + 2 * u**2 / 3)
    return float(np.expm1(2 * u) / (spec.g - spec.alpha))


def _channel_block(spec: OpaSpec) -> Tuple[np.ndarray, np.ndarray]:
    g, alpha, L = spec.g, spec.alpha, spec.L

    scale = np.diag([np.exp(-(g + alpha) * L), np.exp((g - alpha) * L)])
    if g + alpha > 0:
        noise_x = alpha * -np.expm1(-2 * (g + alpha) * L) / (g + alpha)
    else:
        noise_x = 0.0
    noise_p = alpha * _growth_integral(spec)

    return scale, VACUUM_VARIANCE * np.diag([noise_x, noise_p])


def lossy_opa_channel(spec: OpaSpec, mode: int, num_modes: Optional[int] = None) -> GaussianChannel:
    """Closed-form channel of the lossy waveguide amplifier"""
    scale, noise = _channel_block(spec)
    return embed(scale, noise, [mode], num_modes)


def _slice_channel(spec: OpaSpec, N: int) -> GaussianChannel:
    dz = spec.L / N
    transmittance_loss = -np.expm1(-2 * spec.alpha * dz)
    scale = np.diag([
        np.exp(-spec.g * dz) * np.exp(-spec.alpha * dz),
        np.exp(spec.g * dz) * np.exp(-spec.alpha * dz),
    ])
    return GaussianChannel(scale=scale, noise=VACUUM_VARIANCE * transmittance_loss * np.eye(2))


def slice_oracle(spec: OpaSpec, N: int, mode: int, num_modes: Optional[int] = None) -> GaussianChannel:
    """N gain-then-loss slices of length L/N composed into one channel"""
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")
    N = int(N)

    # exponentiation by squaring; composition of identical slices is order-free
    power = _slice_channel(spec, N)
    result = None
    remaining = N
    while remaining:
        if remaining & 1:
            result = power if result is None else result.then(power)
        remaining >>= 1
        if remaining:
            power = power.then(power)

    return embed(result.scale, result.noise, [mode], num_modes)


def efficiency(spec: OpaSpec) -> float:
    """Input-referred transmittance of the amplified quadrature"""
    growth = np.exp(2 * (spec.g - spec.alpha) * spec.L)
    return float(growth / (1 + spec.g * _growth_integral(spec)))


def decompose_loss_then_amp(spec: OpaSpec) -> Tuple[float, float]:
    """p-quadrature channel as loss eta followed by ideal gain G_hat, eta * G_hat = exp(2(g-alpha)L)"""
    G_hat = 1 + spec.g * _growth_integral(spec)
    eta = float(np.exp(2 * (spec.g - spec.alpha) * spec.L) / G_hat)
    return eta, float(G_hat)


def lumped_loss(coupling: float, propagation: float) -> float:
    for name, value in (("coupling", coupling), ("propagation", propagation)):
        if not 0.0 <= value < 1.0:
            raise InvalidArgumentError(f"{name} loss must lie in [0, 1), got {value}")
    return 1 - (1 - coupling) * (1 - propagation)


def spec_from_gain_loss(gl: OpaGainLoss, L_assumed: float = 1.0) -> OpaSpec:
    """Waveguide parameters reproducing a measured gain and effective loss.

    Only gL and alpha L are observable, so L is fixed by the caller. The gain
    constraint pins g - alpha; alpha is then the root of efficiency = 1 - loss.
    """
    if gl.gain_db <= 0:
        raise InvalidArgumentError(f"gain_db must be positive, got {gl.gain_db}")
    if not np.isfinite(L_assumed) or L_assumed <= 0:
        raise InvalidArgumentError(f"L_assumed must be positive, got {L_assumed}")

    net = np.log(10 ** (gl.gain_db / 10)) / (2 * L_assumed)
    target = 1 - gl.effective_loss

    if gl.effective_loss == 0:
        return OpaSpec(g=net, alpha=0.0, L=L_assumed)

    def residual(alpha: float) -> float:
        return efficiency(OpaSpec(g=alpha + net, alpha=alpha, L=L_assumed)) - target

    upper = max(net, 1.0 / L_assumed)
    for _ in range(200):
        if residual(upper) < 0:
            break
        upper *= 2
    else:
        raise InfeasibleParametersError(
            f"no extinction coefficient reproduces {gl.gain_db} dB with {gl.effective_loss:.3g} loss"
        )

    alpha = brentq(residual, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    spec = OpaSpec(g=alpha + net, alpha=alpha, L=L_assumed)
    logger.debug(
        "fitted OPA g=%.12g alpha=%.12g for %.3f dB, efficiency %.12g (%.3g dB net)",
        spec.g, spec.alpha, gl.gain_db, efficiency(spec), to_db(spec.gain),
    )
    return spec


def opa_channel_from_gain_loss(
    gl: OpaGainLoss, L_assumed: float, mode: int, num_modes: Optional[int] = None
) -> GaussianChannel:
    return lossy_opa_channel(spec_from_gain_loss(gl, L_assumed), mode, num_modes)

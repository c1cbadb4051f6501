"""
Squeezing gate with all-optical feedforward

Mode 0 carries the input and becomes the upper (feedforward) arm after the
variable beam splitter; mode 1 carries the ancilla, becomes the lower arm and
is the gate output. The feedforward beam is amplified in p by OPA2, attenuated
and coupled into the output through the weak port of the displacement beam
splitter, where it cancels the ancilla's anti-squeezed noise.

The whole circuit, ancilla squeezer included, is composed into one two-mode
channel before it touches a state. Cancellation then happens inside matrix
entries of order exp(r) instead of covariance entries of order exp(2r).
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import brentq, minimize_scalar

from .analysis import SqueezingPair, infer_loss_and_r
from .errors import (
    EmptyBandError,
    InfeasibleFeedforwardError,
    InfeasibleParametersError,
    InvalidArgumentError,
    PhysicalityError,
)
from .gaussian import (
    GaussianChannel,
    GaussianState,
    apply,
    beam_splitter_channel,
    ideal_opa_channel,
    identity_channel,
    loss_channel,
    marginal,
    phase_rotation_channel,
    shot_normalized,
    tensor,
    to_db,
    vacuum,
)
from .opa import OpaSpec, lossy_opa_channel

logger = logging.getLogger(__name__)

AUTO = "auto"
INPUT_MODE = 0
OUTPUT_MODE = 1

CANCELLATION_FLOOR_DB = -300.0
PRODUCT_TOL = 1e-9

ANCILLA_CONVENTIONS = ("measured", "corrected")

# shot-noise product before and after feedforward, read off the experiment
MEASURED_PRODUCTS = {
    0.62: (3.7, 1.6),
    0.50: (3.5, 1.4),
    0.40: (3.0, 1.4),
    0.30: (2.7, 1.2),
}


def _check_fraction(name: str, value: float, upper_open: bool = True) -> None:
    if not np.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")
    if value < 0 or (value >= 1 if upper_open else value > 1):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise InvalidArgumentError(f"{name} must lie in {bound}, got {value}")


@dataclass(frozen=True)
class GateConfig:
    """Full description of the gate.

    The ancilla is given either as a squeezing parameter `ancilla_r` or as a
    measured shot-normalized pair (`ancilla_s_minus`, `ancilla_s_plus`), which
    is realised as a pure squeezer followed by the inferred loss. `l2` is the
    lumped OPA2 loss; when `opa2_spec` is set the upper arm instead uses
    `opa2_coupling_loss` followed by the lossy-waveguide channel, and `l2`
    only feeds the analytic predictor.
    """

    T: float
    ancilla_r: Optional[float] = None
    ancilla_s_minus: Optional[float] = None
    ancilla_s_plus: Optional[float] = None
    l1: float = 0.0
    l2: float = 0.0
    l3: float = 0.0
    lower_arm_loss: float = 0.0
    tap_loss: float = 0.0
    opa2_gain_db: float = 0.0
    opa2_spec: Optional[OpaSpec] = None
    opa2_coupling_loss: float = 0.0
    opa3_gain_db: Optional[float] = None
    displacement_R: float = 0.01
    ff_attenuation: Union[float, str] = AUTO
    phase_error: float = 0.0
    feedforward_enabled: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.T) and 0 < self.T <= 1):
            raise InvalidArgumentError(f"T must lie in (0, 1], got {self.T}")

        has_r = self.ancilla_r is not None
        has_pair = self.ancilla_s_minus is not None or self.ancilla_s_plus is not None
        if has_r == has_pair:
            raise InvalidArgumentError("ancilla needs exactly one of r or the (S-, S+) pair")
        if has_r and not (np.isfinite(self.ancilla_r) and self.ancilla_r >= 0):
            raise InvalidArgumentError(f"ancilla r must be non-negative, got {self.ancilla_r}")
        if has_pair:
            if self.ancilla_s_minus is None or self.ancilla_s_plus is None:
                raise InvalidArgumentError("ancilla pair needs both S- and S+")
            infer_loss_and_r(SqueezingPair(self.ancilla_s_plus, self.ancilla_s_minus))

        for name in ("l1", "l2", "l3", "lower_arm_loss", "tap_loss", "opa2_coupling_loss"):
            _check_fraction(name, getattr(self, name))

        if not np.isfinite(self.opa2_gain_db) or self.opa2_gain_db < 0:
            raise InvalidArgumentError(f"opa2_gain_db must be non-negative, got {self.opa2_gain_db}")
        if self.opa3_gain_db is not None and not (np.isfinite(self.opa3_gain_db) and self.opa3_gain_db >= 0):
            raise InvalidArgumentError(f"opa3_gain_db must be non-negative, got {self.opa3_gain_db}")
        if not 0 < self.displacement_R < 1:
            raise InvalidArgumentError(f"displacement_R must lie in (0, 1), got {self.displacement_R}")
        if self.ff_attenuation != AUTO:
            if isinstance(self.ff_attenuation, str):
                raise InvalidArgumentError(f"ff_attenuation must be a number or {AUTO!r}")
            _check_fraction("ff_attenuation", self.ff_attenuation, upper_open=False)
        if not np.isfinite(self.phase_error):
            raise InvalidArgumentError(f"phase_error must be finite, got {self.phase_error}")

    @property
    def opa2_gain(self) -> float:
        """Power gain of the amplified quadrature in the upper arm"""
        if self.opa2_spec is not None:
            return self.opa2_spec.gain
        return float(10 ** (self.opa2_gain_db / 10))

    def ancilla_pair(self) -> Tuple[float, float]:
        """(S-, S+) of the ancilla in shot-noise units"""
        if self.ancilla_r is not None:
            return float(np.exp(-2 * self.ancilla_r)), float(np.exp(2 * self.ancilla_r))
        return self.ancilla_s_minus, self.ancilla_s_plus


@dataclass(frozen=True)
class GateOutcome:
    S_plus: float
    S_minus: float
    S_plus_pre: float
    S_minus_pre: float
    attenuation: Optional[float] = None

    def __post_init__(self):
        for name in ("S_plus", "S_minus", "S_plus_pre", "S_minus_pre"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise PhysicalityError(f"{name} must be positive, got {value}")
        for product in (self.product, self.product_pre):
            if product < 1 - PRODUCT_TOL:
                raise PhysicalityError(f"variance product {product:.12g} below the uncertainty bound")

    @property
    def product(self) -> float:
        return self.S_plus * self.S_minus

    @property
    def product_pre(self) -> float:
        return self.S_plus_pre * self.S_minus_pre


@dataclass(frozen=True)
class SweepRecord:
    T: float
    S_plus_dB: float
    S_minus_dB: float
    product: float
    S_plus_pre_dB: float
    S_minus_pre_dB: float
    product_pre: float
    analytic_S_plus_dB: float
    analytic_S_minus_dB: float


@dataclass(frozen=True)
class SpectralModel:
    """Residual delay and dispersion between the arms, and the averaging band (Hz, s, s^2)"""

    delta_tau: float = 0.0
    gdd: float = 0.0
    mask_inner: float = 0.1e12
    mask_outer: float = 1.3e12

    def __post_init__(self):
        for name in ("delta_tau", "gdd", "mask_inner", "mask_outer"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")
        if not 0 <= self.mask_inner < self.mask_outer:
            raise InvalidArgumentError(
                f"need 0 <= mask_inner < mask_outer, got {self.mask_inner}, {self.mask_outer}"
            )

    def phase(self, f: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        omega = 2 * np.pi * np.asarray(f, dtype=float)
        phi = omega * self.delta_tau + 0.5 * self.gdd * omega**2
        return float(phi) if phi.ndim == 0 else phi

    def in_band(self, f: np.ndarray) -> np.ndarray:
        f = np.abs(np.asarray(f, dtype=float))
        return (f >= self.mask_inner) & (f <= self.mask_outer)


@dataclass(frozen=True)
class SpectrumPoint:
    f: float
    S_plus: float
    S_minus: float
    cancellation_db: float


@dataclass(frozen=True)
class SpectrumResult:
    points: List[SpectrumPoint]
    band_S_plus: float
    band_S_minus: float
    band_cancellation: float
    bins_in_band: int = 0


# --- analytic predictors ------------------------------------------------------

def ideal_output_variances(T: float, r: float) -> Tuple[float, float]:
    """(S-, S+) of the lossless gate with a perfectly tuned feedforward"""
    if not (np.isfinite(T) and 0 < T <= 1):
        raise InvalidArgumentError(f"T must lie in (0, 1], got {T}")
    if not np.isfinite(r):
        raise InvalidArgumentError(f"r must be finite, got {r}")
    return float(T + (1 - T) * np.exp(-2 * r)), float(1 / T)


def _ancilla_for_convention(config: GateConfig, convention: str) -> Tuple[float, float]:
    if convention not in ANCILLA_CONVENTIONS:
        raise InvalidArgumentError(f"ancilla convention must be one of {ANCILLA_CONVENTIONS}, got {convention!r}")

    s_minus, s_plus = config.ancilla_pair()
    if convention == "corrected":
        l3 = config.l3
        s_minus, s_plus = (s_minus - l3) / (1 - l3), (s_plus - l3) / (1 - l3)
        if s_minus <= 0:
            raise InvalidArgumentError(
                f"ancilla S- {s_minus:.6g} after removing measurement loss {l3} is not positive"
            )
    return s_minus, s_plus


def analytic_variances(config: GateConfig, ancilla_convention: str = "measured") -> GateOutcome:
    """Closed-form lossy-gate variances with lumped OPA2 and OPA3 losses.

    "measured" uses the configured ancilla levels as they are; "corrected"
    first strips the measurement loss l3 from them.
    """
    T, l2, l3 = config.T, config.l2, config.l3
    s_minus_anc, s_plus_anc = _ancilla_for_convention(config, ancilla_convention)

    s_minus = (1 - l3) * (T + (1 - T) * s_minus_anc) + l3
    s_plus_pre = (1 - l3) * (T + (1 - T) * s_plus_anc) + l3
    if config.feedforward_enabled:
        s_plus = (1 - l3) * (1 / T + (1 - T) / T * l2 / (1 - l2)) + l3
    else:
        s_plus = s_plus_pre

    return GateOutcome(S_plus=s_plus, S_minus=s_minus, S_plus_pre=s_plus_pre, S_minus_pre=s_minus)


# --- circuit ------------------------------------------------------------------

def _upper_arm_power_gain(config: GateConfig) -> float:
    """Power transmission of the p quadrature from the beam splitter to the attenuator"""
    if config.opa2_spec is not None:
        return (1 - config.tap_loss) * (1 - config.opa2_coupling_loss) * config.opa2_spec.gain
    return (1 - config.tap_loss) * (1 - config.l2) * config.opa2_gain


def tune_ff_gain(config: GateConfig) -> float:
    """Attenuation that cancels the ancilla's anti-squeezed noise at the output"""
    if not config.feedforward_enabled:
        raise InvalidArgumentError("feedforward is disabled; there is no gain to tune")

    T, R = config.T, config.displacement_R
    gain = _upper_arm_power_gain(config)
    attenuation = (1 - T) * (1 - R) * (1 - config.lower_arm_loss) / (T * R * gain)

    if attenuation > 1:
        minimum_gain_db = to_db(attenuation * config.opa2_gain)
        raise InfeasibleFeedforwardError(attenuation, minimum_gain_db)

    logger.debug("tuned feedforward attenuation %.12g (T=%.4g, R=%.4g)", attenuation, T, R)
    return float(attenuation)


def resolve_attenuation(config: GateConfig) -> float:
    if not config.feedforward_enabled:
        return 0.0
    if config.ff_attenuation == AUTO:
        return tune_ff_gain(config)
    return float(config.ff_attenuation)


def _ancilla_preparation(config: GateConfig) -> List[GaussianChannel]:
    if config.ancilla_r is not None:
        return [ideal_opa_channel(np.exp(2 * config.ancilla_r), OUTPUT_MODE, 2)]

    inference = infer_loss_and_r(SqueezingPair(config.ancilla_s_plus, config.ancilla_s_minus))
    return [
        ideal_opa_channel(np.exp(2 * inference.r), OUTPUT_MODE, 2),
        loss_channel(1 - inference.loss, OUTPUT_MODE, 2),
    ]


def _opa2_stage(config: GateConfig) -> List[GaussianChannel]:
    if config.opa2_spec is not None:
        return [
            loss_channel(1 - config.opa2_coupling_loss, INPUT_MODE, 2),
            lossy_opa_channel(config.opa2_spec, INPUT_MODE, 2),
        ]
    return [
        loss_channel(1 - config.l2, INPUT_MODE, 2),
        ideal_opa_channel(config.opa2_gain, INPUT_MODE, 2),
    ]


def build_circuit(
    config: GateConfig,
    feedforward: Optional[bool] = None,
    attenuation: Optional[float] = None,
) -> GaussianChannel:
    """Two-mode channel from (input, ancilla vacuum) to (upper arm, output)"""
    feedforward = config.feedforward_enabled if feedforward is None else feedforward
    if not feedforward:
        attenuation = 0.0
    elif attenuation is None:
        attenuation = resolve_attenuation(config)

    stages = [
        *_ancilla_preparation(config),
        loss_channel(1 - config.l1, OUTPUT_MODE, 2),
        beam_splitter_channel(config.T, INPUT_MODE, OUTPUT_MODE, 2),
        loss_channel(1 - config.tap_loss, INPUT_MODE, 2),
        *_opa2_stage(config),
        loss_channel(attenuation, INPUT_MODE, 2),
        phase_rotation_channel(config.phase_error, INPUT_MODE, 2),
        loss_channel(1 - config.lower_arm_loss, OUTPUT_MODE, 2),
        beam_splitter_channel(config.displacement_R, INPUT_MODE, OUTPUT_MODE, 2),
        loss_channel(1 - config.l3, OUTPUT_MODE, 2),
    ]

    circuit = identity_channel(2)
    for stage in stages:
        circuit = circuit.then(stage)
    return circuit


def _readout(state: GaussianState, config: GateConfig) -> Tuple[float, float]:
    """(S-, S+) of the output mode, through OPA3 when its gain is configured"""
    output = marginal(state, OUTPUT_MODE)
    if config.opa3_gain_db is None:
        return output.shot_normalized_variances(0)

    gain = 10 ** (config.opa3_gain_db / 10)
    amplify = ideal_opa_channel(gain, 0)
    s_plus = shot_normalized(apply(amplify, output).cov[1, 1]) / gain
    # OPA3 amplifies p only; x is read with the pump phase turned by 90 degrees
    swapped = phase_rotation_channel(np.pi / 2, 0).then(amplify)
    s_minus = shot_normalized(apply(swapped, output).cov[1, 1]) / gain
    return s_minus, s_plus


def run_gate(config: GateConfig, input_state: Optional[GaussianState] = None) -> GateOutcome:
    input_state = vacuum(1) if input_state is None else input_state
    if input_state.num_modes != 1:
        raise InvalidArgumentError(f"gate input must be a single mode, got {input_state.num_modes}")

    initial = tensor(input_state, vacuum(1))
    attenuation = resolve_attenuation(config)

    s_minus_pre, s_plus_pre = _readout(apply(build_circuit(config, feedforward=False), initial), config)
    if config.feedforward_enabled:
        circuit = build_circuit(config, feedforward=True, attenuation=attenuation)
        s_minus, s_plus = _readout(apply(circuit, initial), config)
    else:
        s_minus, s_plus = s_minus_pre, s_plus_pre

    return GateOutcome(
        S_plus=s_plus,
        S_minus=s_minus,
        S_plus_pre=s_plus_pre,
        S_minus_pre=s_minus_pre,
        attenuation=attenuation,
    )


# --- feedforward tuning oracle and cancellation ---------------------------------

def _ancilla_noise_power(circuit: GaussianChannel) -> float:
    """Power of the ancilla's anti-squeezed quadrature reaching both output quadratures"""
    rows = [2 * OUTPUT_MODE, 2 * OUTPUT_MODE + 1]
    column = 2 * OUTPUT_MODE + 1
    return float(0.5 * np.sum(circuit.scale[rows, column] ** 2))


def tune_ff_gain_numerical(config: GateConfig, tol: float = 1e-13) -> float:
    """Golden-section search for the attenuation minimising the ancilla noise at the output"""
    enabled = replace(config, feedforward_enabled=True)

    def objective(attenuation: float) -> float:
        attenuation = min(max(attenuation, 0.0), 1.0)
        return _ancilla_noise_power(build_circuit(enabled, feedforward=True, attenuation=attenuation))

    grid = np.logspace(-12, 0, 241)
    values = np.array([objective(a) for a in grid])
    best = int(np.argmin(values))

    if 0 < best < len(grid) - 1:
        bracket = (grid[best - 1], grid[best], grid[best + 1])
        result = minimize_scalar(objective, bracket=bracket, method="golden", tol=tol)
    else:
        result = minimize_scalar(objective, bounds=(0.0, 1.0), method="bounded", options={"xatol": tol})

    logger.debug("numerical feedforward attenuation %.15g after %s evaluations", result.x, result.nfev)
    return float(result.x)


def cancellation_level(config: GateConfig, phase_error: Optional[float] = None) -> float:
    """Residual ancilla noise with feedforward on relative to off, in dB"""
    if phase_error is not None:
        config = replace(config, phase_error=phase_error)

    noise_off = _ancilla_noise_power(build_circuit(config, feedforward=False))
    if noise_off == 0:
        raise InvalidArgumentError("no ancilla noise reaches the output without feedforward (T = 1)")
    noise_on = _ancilla_noise_power(build_circuit(config, feedforward=True, attenuation=resolve_attenuation(config)))

    ratio = noise_on / noise_off
    floor = 10 ** (CANCELLATION_FLOOR_DB / 10)
    if ratio < floor:
        logger.debug("cancellation %.3g below the %.0f dB floor", ratio, CANCELLATION_FLOOR_DB)
        return CANCELLATION_FLOOR_DB
    return to_db(ratio)


def phase_tolerance(
    config: GateConfig,
    target_db: float = -30.0,
    max_phase: float = np.pi,
    grid_points: int = 181,
) -> float:
    """Smallest phase error (radians) at which the cancellation degrades to target_db"""
    config = replace(config, ff_attenuation=resolve_attenuation(config))

    def excess(theta: float) -> float:
        return cancellation_level(config, phase_error=theta) - target_db

    if excess(0.0) >= 0:
        raise InfeasibleParametersError(
            f"cancellation is already worse than {target_db} dB at zero phase error"
        )

    grid = np.linspace(0.0, max_phase, grid_points)
    previous = grid[0]
    for theta in grid[1:]:
        if excess(theta) >= 0:
            crossing = brentq(excess, previous, theta, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            logger.debug("cancellation crosses %.1f dB at %.9g rad", target_db, crossing)
            return float(crossing)
        previous = theta

    raise InfeasibleParametersError(f"cancellation stays below {target_db} dB up to {max_phase} rad")


# --- sweeps -------------------------------------------------------------------

def _sweep_point(config: GateConfig, T: float, ancilla_convention: str) -> SweepRecord:
    point = replace(config, T=float(T))
    outcome = run_gate(point)
    predicted = analytic_variances(point, ancilla_convention)
    return SweepRecord(
        T=float(T),
        S_plus_dB=to_db(outcome.S_plus),
        S_minus_dB=to_db(outcome.S_minus),
        product=outcome.product,
        S_plus_pre_dB=to_db(outcome.S_plus_pre),
        S_minus_pre_dB=to_db(outcome.S_minus_pre),
        product_pre=outcome.product_pre,
        analytic_S_plus_dB=to_db(predicted.S_plus),
        analytic_S_minus_dB=to_db(predicted.S_minus),
    )


def sweep_transmittance(
    config: GateConfig,
    T_grid: Sequence[float],
    ancilla_convention: str = "measured",
    n_jobs: int = 1,
) -> List[SweepRecord]:
    """Gate and analytic levels at each T, sorted by T"""
    grid = sorted(float(T) for T in T_grid)
    if not grid:
        raise InvalidArgumentError("transmittance grid is empty")
    for T in grid:
        if not 0 < T <= 1:
            raise InvalidArgumentError(f"T must lie in (0, 1], got {T}")

    records = Parallel(n_jobs=n_jobs)(
        delayed(_sweep_point)(config, T, ancilla_convention) for T in grid
    )
    return sorted(records, key=lambda record: record.T)


def _spectrum_point(config: GateConfig, f: float, phase: float) -> SpectrumPoint:
    point = replace(config, phase_error=config.phase_error + phase)
    outcome = run_gate(point)
    return SpectrumPoint(
        f=float(f),
        S_plus=outcome.S_plus,
        S_minus=outcome.S_minus,
        cancellation_db=cancellation_level(point),
    )


def spectral_sweep(
    config: GateConfig,
    model: SpectralModel,
    f_grid: Sequence[float],
    n_jobs: int = 1,
) -> SpectrumResult:
    """Per-sideband levels with the dispersive phase, averaged over the masked band"""
    frequencies = np.sort(np.asarray(f_grid, dtype=float))
    if frequencies.size == 0 or np.any(frequencies <= 0) or not np.all(np.isfinite(frequencies)):
        raise InvalidArgumentError("frequency grid must hold positive, finite frequencies")

    band = model.in_band(frequencies)
    if not np.any(band):
        raise EmptyBandError(
            f"no bins between {model.mask_inner / 1e12:g} and {model.mask_outer / 1e12:g} THz"
        )

    # one attenuation for every sideband
    config = replace(config, ff_attenuation=resolve_attenuation(config))
    phases = model.phase(frequencies)
    points = Parallel(n_jobs=n_jobs)(
        delayed(_spectrum_point)(config, f, phi) for f, phi in zip(frequencies, np.atleast_1d(phases))
    )

    # +f and -f sidebands are identical, so double weighting leaves the mean unchanged
    s_plus = np.array([p.S_plus for p in points])[band]
    s_minus = np.array([p.S_minus for p in points])[band]
    cancellation = 10 ** (np.array([p.cancellation_db for p in points])[band] / 10)

    return SpectrumResult(
        points=list(points),
        band_S_plus=float(np.mean(s_plus)),
        band_S_minus=float(np.mean(s_minus)),
        band_cancellation=float(np.mean(cancellation)),
        bins_in_band=int(np.count_nonzero(band)),
    )

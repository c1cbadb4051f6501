"""
Calibration arithmetic: loss inference from a squeezing pair, loss budgets,
path-length tolerances
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.constants import speed_of_light

from .errors import DegenerateMeasurementError, InconsistentMeasurementError, InvalidArgumentError
from .gaussian import antisqueezing_db_to_ratio, squeezing_db_to_ratio, to_db

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class SqueezingPair:
    """Shot-normalized anti-squeezing and squeezing of one mode"""

    s_plus: float
    s_minus: float

    def __post_init__(self):
        for name in ("s_plus", "s_minus"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive and finite, got {value}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_db(cls, s_plus_db: float, s_minus_db: float) -> "SqueezingPair":
        """Levels quoted as magnitudes, e.g. (9.3, 3.6) for +9.3 dB / -3.6 dB"""
        return cls(antisqueezing_db_to_ratio(s_plus_db), squeezing_db_to_ratio(s_minus_db))

    @property
    def db(self) -> Tuple[float, float]:
        return to_db(self.s_plus), to_db(self.s_minus)


@dataclass(frozen=True)
class LossInference:
    loss: float
    r: float
    residual: float


@dataclass(frozen=True)
class LossBudget:
    """Ordered (label, transmittance) items"""

    items: Tuple[Tuple[str, float], ...]

    def __post_init__(self):
        items = tuple((str(label), float(value)) for label, value in self.items)
        for label, value in items:
            if not 0.0 < value <= 1.0:
                raise InvalidArgumentError(f"transmittance of {label!r} must lie in (0, 1], got {value}")
        object.__setattr__(self, "items", items)

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "LossBudget":
        return cls(tuple((f"item{i + 1}", value) for i, value in enumerate(values)))

    @property
    def transmittances(self) -> np.ndarray:
        return np.array([value for _, value in self.items], dtype=float)


DEFAULT_LOSS_BUDGET = LossBudget((
    ("OPA1 output", 0.96),
    ("variable beam splitter", 0.93),
    ("lower arm", 0.92),
    ("feedforward tap", 0.99),
    ("OPA3 measurement", 0.79),
))


def forward_model(loss: float, r: float) -> SqueezingPair:
    """Pure squeezer r followed by lumped loss"""
    if not 0.0 <= loss < 1.0:
        raise InvalidArgumentError(f"loss must lie in [0, 1), got {loss}")
    return SqueezingPair(
        s_plus=(1 - loss) * np.exp(2 * r) + loss,
        s_minus=(1 - loss) * np.exp(-2 * r) + loss,
    )


def infer_loss_and_r(pair: SqueezingPair) -> LossInference:
    """Invert S+- = (1 - L) exp(+-2r) + L in closed form"""
    s_plus, s_minus = pair.s_plus, pair.s_minus

    if abs(s_plus - 1) < DEGENERACY_TOL and abs(s_minus - 1) < DEGENERACY_TOL:
        raise DegenerateMeasurementError("vacuum pair (1, 1) does not determine loss or squeezing")
    if s_plus < 1 < s_minus:
        s_plus, s_minus = s_minus, s_plus
    if not s_minus <= 1 <= s_plus:
        raise InconsistentMeasurementError(
            f"pair ({s_plus:.6g}, {s_minus:.6g}) does not straddle shot noise"
        )

    denominator = s_plus + s_minus - 2
    if abs(denominator) < DEGENERACY_TOL:
        raise InconsistentMeasurementError("S+ + S- = 2: no finite loss reproduces this pair")

    loss = (s_plus * s_minus - 1) / denominator
    if -DEGENERACY_TOL < loss < 0:
        loss = 0.0
    if not 0.0 <= loss < 1.0:
        raise InconsistentMeasurementError(f"inferred loss {loss:.6g} lies outside [0, 1)")

    r = 0.5 * np.log((s_plus - loss) / (1 - loss))
    model = forward_model(loss, r)
    residual = max(abs(model.s_plus - s_plus), abs(model.s_minus - s_minus))

    logger.debug("inferred loss %.12g, r %.12g (residual %.3g)", loss, r, residual)
    return LossInference(loss=float(loss), r=float(r), residual=float(residual))


def loss_sensitivity(pair: SqueezingPair, delta_db: float) -> Tuple[float, float]:
    """Loss range when each level moves independently by +-delta_db"""
    if delta_db < 0:
        raise InvalidArgumentError(f"delta_db must be non-negative, got {delta_db}")

    plus_db, minus_db = pair.db
    losses = []
    for dp in (-delta_db, delta_db):
        for dm in (-delta_db, delta_db):
            corner = SqueezingPair(10 ** ((plus_db + dp) / 10), 10 ** ((minus_db + dm) / 10))
            losses.append(infer_loss_and_r(corner).loss)
    return min(losses), max(losses)


def loss_budget_product(budget: LossBudget) -> Tuple[float, float]:
    if not budget.items:
        raise InvalidArgumentError("loss budget is empty")
    total = float(np.prod(budget.transmittances))
    return total, 1 - total


def budget_gap(inferred_loss: float, budget: Optional[LossBudget] = None) -> float:
    """Inferred minus itemized loss; positive means unaccounted loss"""
    _, budget_loss = loss_budget_product(budget or DEFAULT_LOSS_BUDGET)
    return inferred_loss - budget_loss


def path_precision(f: float, tolerance_degrees: float) -> float:
    """Optical path length in metres that shifts a sideband at f by the given phase"""
    if not (np.isfinite(f) and f > 0):
        raise InvalidArgumentError(f"frequency must be positive, got {f}")
    if not (np.isfinite(tolerance_degrees) and tolerance_degrees > 0):
        raise InvalidArgumentError(f"tolerance must be positive, got {tolerance_degrees}")
    return speed_of_light / f * tolerance_degrees / 360


def product_metric(pair: SqueezingPair) -> float:
    return pair.s_plus * pair.s_minus

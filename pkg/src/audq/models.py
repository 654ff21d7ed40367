"""Distribution descriptors and seeded random variate streams.

The same model objects feed two consumers: the closed-form layer, which
only needs moments and the MGF at negative arguments, and the simulator,
which needs reproducible samplers. All models are immutable value objects;
mutable RNG state lives in :class:`RngStream`, owned by a single run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SERVICE_UNIFORM = "uniform"
SERVICE_EXPONENTIAL = "exponential"
SERVICE_DETERMINISTIC = "deterministic"
SERVICE_GENERAL = "general"

DECISION_POISSON = "poisson"
DECISION_PERIODIC = "periodic"

# Sampler signature for general service laws: (generator, n) -> n draws.
Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class ServiceModel:
    """Service-time law with mean fixed to 1/mu.

    The three named kinds are fully determined by the rate ``mu``:
    uniform on (0, 2/mu), exponential with rate mu, or a point mass at
    1/mu. A ``general`` model carries its moments and MGF as data and is
    analytic-only unless a sampler is supplied.
    """

    kind: str
    mu: float
    mean: float
    second_moment: float
    mgf_neg_fn: Optional[Callable[[float], float]] = None
    sampler: Optional[Sampler] = None

    def __post_init__(self) -> None:
        if self.kind not in (SERVICE_UNIFORM, SERVICE_EXPONENTIAL,
                             SERVICE_DETERMINISTIC, SERVICE_GENERAL):
            raise ValueError(f"unknown service kind: {self.kind!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError("service rate mu must be positive and finite")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("mean service time must be positive and finite")
        if not math.isfinite(self.second_moment):
            raise ValueError("second moment must be finite")
        # Jensen: E[S^2] >= E[S]^2, with a small slack for float round-off.
        if self.second_moment < self.mean ** 2 * (1.0 - 1e-12):
            raise ValueError("second moment below squared mean")
        if self.kind == SERVICE_GENERAL and self.mgf_neg_fn is not None:
            at_zero = float(self.mgf_neg_fn(0.0))
            if abs(at_zero - 1.0) > 1e-9:
                raise ValueError("mgf_neg(0) must equal 1")

    @staticmethod
    def uniform(mu: float) -> "ServiceModel":
        """Uniform service on (0, 2/mu); E[S^2] = 4/(3 mu^2)."""
        return ServiceModel(SERVICE_UNIFORM, mu, 1.0 / mu, 4.0 / (3.0 * mu * mu))

    @staticmethod
    def exponential(mu: float) -> "ServiceModel":
        """Exponential service with rate mu; E[S^2] = 2/mu^2."""
        return ServiceModel(SERVICE_EXPONENTIAL, mu, 1.0 / mu, 2.0 / (mu * mu))

    @staticmethod
    def deterministic(mu: float) -> "ServiceModel":
        """Constant service time 1/mu; E[S^2] = 1/mu^2."""
        return ServiceModel(SERVICE_DETERMINISTIC, mu, 1.0 / mu, 1.0 / (mu * mu))

    @staticmethod
    def from_moments(mean: float, second_moment: float,
                     mgf_neg: Callable[[float], float],
                     sampler: Optional[Sampler] = None) -> "ServiceModel":
        """General service law given by its first two moments and MGF.

        Without a sampler the model supports only the closed-form layer;
        the simulator will refuse it.
        """
        return ServiceModel(SERVICE_GENERAL, 1.0 / mean, mean, second_moment,
                            mgf_neg_fn=mgf_neg, sampler=sampler)


@dataclass(frozen=True)
class ArrivalModel:
    """Poisson update generation: i.i.d. exponential inter-arrivals at rate lam."""

    lam: float

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("arrival rate lam must be positive and finite")


@dataclass(frozen=True)
class DecisionModel:
    """Decision-epoch law: Poisson renewals or a periodic grid at rate nu.

    For the periodic kind, epochs sit at phase + j/nu. ``phase=None``
    means "draw the phase uniformly on [0, 1/nu) per run", which is the
    stationary-ensemble reading; pinning a phase is for debugging.
    """

    kind: str
    nu: float
    phase: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in (DECISION_POISSON, DECISION_PERIODIC):
            raise ValueError(f"unknown decision kind: {self.kind!r}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError("decision rate nu must be positive and finite")
        if self.kind == DECISION_POISSON and self.phase is not None:
            raise ValueError("phase only applies to periodic decisions")
        if self.phase is not None and not (0.0 <= self.phase < 1.0 / self.nu):
            raise ValueError("phase must lie in [0, 1/nu)")

    @staticmethod
    def poisson(nu: float) -> "DecisionModel":
        return DecisionModel(DECISION_POISSON, nu)

    @staticmethod
    def periodic(nu: float, phase: Optional[float] = None) -> "DecisionModel":
        return DecisionModel(DECISION_PERIODIC, nu, phase)


class RngStream:
    """Reproducible random stream addressed by (seed, substream_id).

    Two streams built from the same pair yield bit-identical variate
    sequences; distinct substream ids give statistically independent
    sequences. ``lanes(n)`` derives n independent child generators for
    the separate processes of one run (arrivals, service, decisions),
    deterministically and regardless of how much the main generator has
    already been consumed.
    """

    def __init__(self, seed: int, substream_id: int = 0):
        self.seed = int(seed)
        self.substream_id = int(substream_id)
        self._gen = np.random.default_rng(self._sequence())

    def _sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, self.substream_id])

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def lanes(self, n: int) -> tuple[np.random.Generator, ...]:
        return tuple(np.random.default_rng(s) for s in self._sequence().spawn(n))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, substream_id={self.substream_id})"


def service_moments(service: ServiceModel) -> tuple[float, float]:
    """Return (E[S], E[S^2]) for a service law."""
    return service.mean, service.second_moment


def service_mgf_neg(service: ServiceModel, nu: float) -> float:
    """Evaluate E[exp(-nu S)] at nu >= 0.

    Uniform case: (mu/(2 nu)) (1 - exp(-2 nu/mu)), which is 0/0 at nu=0;
    for 2 nu/mu below 1e-6 the series branch 1 - x/2 + x^2/6 avoids the
    cancellation and has error O(x^3).
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu == 0:
        return 1.0
    if service.kind == SERVICE_UNIFORM:
        x = 2.0 * nu / service.mu
        if x < 1e-6:
            return 1.0 - x / 2.0 + x * x / 6.0
        return -math.expm1(-x) / x
    if service.kind == SERVICE_EXPONENTIAL:
        return service.mu / (service.mu + nu)
    if service.kind == SERVICE_DETERMINISTIC:
        return math.exp(-nu / service.mu)
    if service.mgf_neg_fn is None:
        raise ValueError("general service model has no MGF")
    return float(service.mgf_neg_fn(nu))


def sample_n(model: ServiceModel | ArrivalModel | DecisionModel,
             rng: RngStream | np.random.Generator, n: int) -> np.ndarray:
    """Draw n variates from a model: inter-arrival, service, or inter-decision times."""
    gen = rng.generator if isinstance(rng, RngStream) else rng
    if isinstance(model, ArrivalModel):
        return gen.exponential(1.0 / model.lam, n)
    if isinstance(model, DecisionModel):
        if model.kind == DECISION_POISSON:
            return gen.exponential(1.0 / model.nu, n)
        return np.full(n, 1.0 / model.nu)
    if model.kind == SERVICE_UNIFORM:
        return gen.uniform(0.0, 2.0 / model.mu, n)
    if model.kind == SERVICE_EXPONENTIAL:
        return gen.exponential(1.0 / model.mu, n)
    if model.kind == SERVICE_DETERMINISTIC:
        return np.full(n, 1.0 / model.mu)
    if model.sampler is None:
        raise ValueError("no sampler available for moment-only service model")
    return np.asarray(model.sampler(gen, n), dtype=float)


def sample(model: ServiceModel | ArrivalModel | DecisionModel,
           rng: RngStream | np.random.Generator) -> float:
    """Draw a single variate; see :func:`sample_n`."""
    return float(sample_n(model, rng, 1)[0])

"""Closed-form average age-upon-decisions and missing probabilities.

Covers the bufferless (length-1 blocking) M/G/1/1 queue fed by Poisson
arrivals, under two decision-epoch laws:

* Poisson decisions ("-M" suffix): exact expressions.
* Periodic decisions ("-D" suffix): expressions built on a uniform
  decision-epoch surrogate within each inter-departure interval; these
  are flagged as approximate, except the deterministic-service missing
  probability which is exactly zero.

Also included: the missing probability of the FCFS infinite-buffer M/G/1
queue with Poisson decisions (for buffered-vs-bufferless comparisons),
the service-kind ordering predicates, and the decision-rate threshold at
which the uniform-service system overtakes the exponential-service one.

Everywhere ``rho = lam/mu`` is the offered load and, for periodic
decisions, ``m0 = nu/mu`` is the (integer) number of decision slots per
mean service time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .models import ServiceModel, service_mgf_neg, service_moments

EXACT = "exact"
UNIFORM_EPOCH_APPROX = "uniform-epoch-approx"

KIND_UNIFORM = "U"
KIND_EXPONENTIAL = "E"
KIND_DETERMINISTIC = "D"

_KIND_ALIASES = {
    "U": "U", "uniform": "U",
    "E": "E", "exp": "E", "exponential": "E",
    "D": "D", "det": "D", "deterministic": "D",
}

_KIND_NAMES = {"U": "uniform", "E": "exponential", "D": "deterministic"}


def kind_letter(kind: str) -> str:
    """Normalize a service-kind spelling to one of 'U', 'E', 'D'."""
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown service kind: {kind!r}") from None


def service_model_for(kind: str, mu: float) -> ServiceModel:
    """Build the ServiceModel matching a specialized-formula kind letter."""
    letter = kind_letter(kind)
    if letter == "U":
        return ServiceModel.uniform(mu)
    if letter == "E":
        return ServiceModel.exponential(mu)
    return ServiceModel.deterministic(mu)


@dataclass(frozen=True)
class AnalyticReport:
    """A closed-form result, tagged with its exactness and formula identity.

    Fields not produced by a formula are None (e.g. the Poisson-decision
    age formula carries no decision rate, hence no missing probability).
    """

    avg_aud: Optional[float]
    missing_prob: Optional[float]
    exactness: str
    formula_id: str

    def __post_init__(self) -> None:
        if self.exactness not in (EXACT, UNIFORM_EPOCH_APPROX):
            raise ValueError(f"unknown exactness tag: {self.exactness!r}")
        if self.avg_aud is not None and not self.avg_aud > 0:
            raise ValueError("avg_aud must be positive")
        if self.missing_prob is not None and not 0.0 <= self.missing_prob <= 1.0:
            raise ValueError("missing_prob must lie in [0, 1]")


@dataclass(frozen=True)
class DecisionCountMoments:
    """First and second moments of per-interval periodic decision counts.

    One inter-departure interval splits into the idle gap (departure of
    the previous update until the next successful arrival) and the
    service span of the new update; the fields are the moments of the
    number of decision epochs landing in each part.
    """

    idle_mean: float
    idle_sq: float
    service_mean: float
    service_sq: float

    def __post_init__(self) -> None:
        for v in (self.idle_mean, self.idle_sq, self.service_mean, self.service_sq):
            if v < 0:
                raise ValueError("count moments must be nonnegative")
        if self.idle_sq < self.idle_mean ** 2 * (1.0 - 1e-12):
            raise ValueError("idle count variance negative")
        if self.service_sq < self.service_mean ** 2 * (1.0 - 1e-12):
            raise ValueError("service count variance negative")


@dataclass(frozen=True)
class OrderingVerdict:
    """Service kinds ordered from smallest to largest metric value."""

    metric: str
    relation: tuple[str, ...]
    strict: bool


def _check_rates(**rates: float) -> None:
    for name, value in rates.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite")


def _check_m0(m0: int) -> int:
    if isinstance(m0, bool) or int(m0) != m0 or m0 < 1:
        raise ValueError("m0 must be an integer >= 1")
    return int(m0)


def aud_mg11_m(lam: float, service: ServiceModel) -> AnalyticReport:
    """Average age upon decisions for the bufferless queue with Poisson decisions.

    avg = lam*mu*E[S^2] / (2 (lam+mu)) + (lam+mu)/(lam*mu),  mu = 1/E[S].

    Exact, and independent of the decision rate: Poisson decision epochs
    sample the age process uniformly in time, so the time-average age is
    recovered whatever the rate. Hence no decision-rate argument exists.
    """
    _check_rates(lam=lam)
    mean, es2 = service_moments(service)
    if not math.isfinite(es2):
        raise ValueError("second moment of service time must be finite")
    mu = 1.0 / mean
    avg = lam * mu * es2 / (2.0 * (lam + mu)) + (lam + mu) / (lam * mu)
    return AnalyticReport(avg, None, EXACT, "aud:M/G/1/1-M")


def aud_specialized_m(lam: float, mu: float, kind: str) -> float:
    """Poisson-decision average age for the three named service laws.

    With rho = lam/mu:
      uniform:        (3 + 6 rho + 5 rho^2) / (3 lam (1+rho))
      exponential:    (1 + 2 rho + 2 rho^2) / (lam (1+rho))
      deterministic:  (2 + 4 rho + 3 rho^2) / (2 lam (1+rho))
    """
    _check_rates(lam=lam, mu=mu)
    rho = lam / mu
    letter = kind_letter(kind)
    if letter == "U":
        return (3.0 + 6.0 * rho + 5.0 * rho * rho) / (3.0 * lam * (1.0 + rho))
    if letter == "E":
        return (1.0 + 2.0 * rho + 2.0 * rho * rho) / (lam * (1.0 + rho))
    return (2.0 + 4.0 * rho + 3.0 * rho * rho) / (2.0 * lam * (1.0 + rho))


def pmis_mg11_m(lam: float, nu: float, service: ServiceModel) -> float:
    """Missing probability of the bufferless queue with Poisson decisions.

    An update is missed when no decision falls inside its usage interval,
    whose length is (residual inter-arrival) + (service time); both
    transforms factor: p = lam/(lam+nu) * E[exp(-nu S)].
    """
    _check_rates(lam=lam, nu=nu)
    return lam / (lam + nu) * service_mgf_neg(service, nu)


def pmis_mg1_m_infinite(lam: float, nu: float, rho: float,
                        service: ServiceModel) -> float:
    """Missing probability of the FCFS infinite-buffer queue, Poisson decisions.

    p = E[exp(-nu S)] * (rho*nu + lam) / (lam + nu), valid for rho < 1.
    Always >= the bufferless value at equal parameters; the gap vanishes
    as rho -> 0.
    """
    _check_rates(lam=lam, nu=nu)
    if not 0.0 < rho < 1.0:
        raise ValueError("infinite-buffer queue requires 0 < rho < 1")
    return service_mgf_neg(service, nu) * (rho * nu + lam) / (lam + nu)


def decision_count_moments(lam: float, mu: float, m0: int,
                           kind: str) -> DecisionCountMoments:
    """Moments of periodic decision counts per inter-departure interval.

    With nu = m0*mu, beta = exp(-lam/nu), alpha = exp(-mu/nu):

    Idle gap (exponential, identical for every service kind):
      mean = nu/lam, second moment = nu (1+beta) / (lam (1-beta)).
    Service span:
      uniform:        (2 m0 + 1)/2  and  (2m0+1)(2m0+2)(4m0+3)/(12 m0)
      exponential:    m0            and  m0 (1+alpha)/(1-alpha)
      deterministic:  m0            and  m0^2 (the span covers exactly m0 slots)
    """
    _check_rates(lam=lam, mu=mu)
    m0 = _check_m0(m0)
    nu = m0 * mu
    beta = math.exp(-lam / nu)
    idle_mean = nu / lam
    idle_sq = nu * (1.0 + beta) / (lam * (1.0 - beta))
    letter = kind_letter(kind)
    if letter == "U":
        service_mean = (2.0 * m0 + 1.0) / 2.0
        service_sq = ((2.0 * m0 + 1.0) * (2.0 * m0 + 2.0) * (4.0 * m0 + 3.0)
                      / (12.0 * m0))
    elif letter == "E":
        alpha = math.exp(-mu / nu)
        service_mean = float(m0)
        service_sq = nu * (1.0 + alpha) / (mu * (1.0 - alpha))
    else:
        service_mean = float(m0)
        service_sq = float(m0) ** 2
    return DecisionCountMoments(idle_mean, idle_sq, service_mean, service_sq)


def aud_mg11_d_general(mean_system_time: float, mean_interdeparture: float,
                       nu: float, counts: DecisionCountMoments) -> float:
    """Average age upon periodic decisions from per-interval count moments.

    avg = E[T] (m1 + m2) / (nu E[Y])
        + (q1 + q2 + 2 m1 m2) / (2 nu^2 E[Y])

    with (m1, q1) the idle-gap count moments, (m2, q2) the service-span
    count moments, E[T] the mean system time of the previous update and
    E[Y] the mean inter-departure time. Rests on the uniform surrogate
    for the first decision offset in each interval, hence approximate.
    """
    _check_rates(mean_system_time=mean_system_time,
                 mean_interdeparture=mean_interdeparture, nu=nu)
    m1, q1 = counts.idle_mean, counts.idle_sq
    m2, q2 = counts.service_mean, counts.service_sq
    return (mean_system_time * (m1 + m2) / (nu * mean_interdeparture)
            + (q1 + q2 + 2.0 * m1 * m2)
            / (2.0 * nu * nu * mean_interdeparture))


def aud_specialized_d(lam: float, mu: float, m0: int, kind: str) -> AnalyticReport:
    """Periodic-decision average age for the three named service laws.

    With rho = lam/mu, nu = m0*mu, alpha = exp(-mu/nu), beta = exp(-lam/nu):

      uniform:       (2 rho m0 + 4 m0 + rho + 1) / (2 mu m0 (1+rho))
                     + (1+beta) / (2 mu m0 (1+rho)(1-beta))
                     + rho (8 m0^3 + 18 m0^2 + 13 m0 + 3) / (12 mu m0^3 (1+rho))
      exponential:   (2+rho)/(mu (1+rho))
                     + rho (1+alpha) / (2 mu m0 (1+rho)(1-alpha))
                     + (1+beta) / (2 mu m0 (1+rho)(1-beta))
      deterministic: (4+3 rho)/(2 mu (1+rho))
                     + (1+beta) / (2 mu m0 (1+rho)(1-beta))

    Equal to aud_mg11_d_general composed with decision_count_moments,
    E[T] = 1/mu and E[Y] = 1/lam + 1/mu.
    """
    _check_rates(lam=lam, mu=mu)
    m0 = _check_m0(m0)
    rho = lam / mu
    nu = m0 * mu
    beta = math.exp(-lam / nu)
    bterm = (1.0 + beta) / (2.0 * mu * m0 * (1.0 + rho) * (1.0 - beta))
    letter = kind_letter(kind)
    if letter == "U":
        avg = ((2.0 * rho * m0 + 4.0 * m0 + rho + 1.0)
               / (2.0 * mu * m0 * (1.0 + rho))
               + bterm
               + rho * (8.0 * m0 ** 3 + 18.0 * m0 ** 2 + 13.0 * m0 + 3.0)
               / (12.0 * mu * m0 ** 3 * (1.0 + rho)))
    elif letter == "E":
        alpha = math.exp(-mu / nu)
        avg = ((2.0 + rho) / (mu * (1.0 + rho))
               + rho * (1.0 + alpha) / (2.0 * mu * m0 * (1.0 + rho) * (1.0 - alpha))
               + bterm)
    else:
        avg = (4.0 + 3.0 * rho) / (2.0 * mu * (1.0 + rho)) + bterm
    return AnalyticReport(avg, None, UNIFORM_EPOCH_APPROX,
                          f"aud:M/{letter}/1/1-D")


def pmis_mg11_d(lam: float, mu: float, m0: int, kind: str) -> AnalyticReport:
    """Periodic-decision missing probability for the three named service laws.

    With rho, m0, alpha, beta as in aud_specialized_d:

      uniform:       1/(4 m0) + (m0 (1-beta) - rho) / (2 rho^2)
      exponential:   m0 (alpha-beta)/(rho (rho-1))
                     + (rho - m0 - rho m0)(1-alpha)/rho + alpha
      deterministic: exactly 0 (every service span covers m0 >= 1 slots)

    The uniform/exponential values rest on a uniform surrogate for the
    decision offset at each departure; the deterministic value is exact.
    The exponential expression has a removable singularity at rho = 1;
    loads with |rho - 1| < 1e-9 are rejected and callers are expected to
    perturb rho instead.
    """
    _check_rates(lam=lam, mu=mu)
    m0 = _check_m0(m0)
    rho = lam / mu
    nu = m0 * mu
    letter = kind_letter(kind)
    if letter == "D":
        return AnalyticReport(None, 0.0, EXACT, "pmis:M/D/1/1-D")
    one_minus_beta = -math.expm1(-lam / nu)
    if letter == "U":
        p = 1.0 / (4.0 * m0) + (m0 * one_minus_beta - rho) / (2.0 * rho * rho)
    else:
        if abs(rho - 1.0) < 1e-9:
            raise ValueError("rho too close to 1: exponential-service "
                             "missing probability is singular; perturb rho")
        alpha = math.exp(-mu / nu)
        beta = math.exp(-lam / nu)
        p = (m0 * (alpha - beta) / (rho * (rho - 1.0))
             + (rho - m0 - rho * m0) * (1.0 - alpha) / rho + alpha)
    if not -1e-9 <= p <= 1.0 + 1e-9:
        raise ValueError(f"missing probability {p} escaped [0, 1]")
    p = min(1.0, max(0.0, p))
    return AnalyticReport(None, p, UNIFORM_EPOCH_APPROX, f"pmis:M/{letter}/1/1-D")


def find_m0_star(lam: float, mu: float, m0_max: int) -> Optional[int]:
    """Decision-rate threshold where uniform service overtakes exponential.

    Scans m0 = 1..m0_max for the last point with age(exponential) <=
    age(uniform) under the periodic-decision formulas; beyond it the
    uniform-service system is strictly better. The difference is
    monotone in m0 with a single sign change, so an exhaustive scan is
    exact. Returns None when no sign change occurs within range.
    """
    if m0_max < 1:
        raise ValueError("m0_max must be >= 1")
    for m0 in range(1, m0_max + 1):
        diff = (aud_specialized_d(lam, mu, m0, "U").avg_aud
                - aud_specialized_d(lam, mu, m0, "E").avg_aud)
        if diff < 0:
            if m0 == 1:
                return None  # uniform already better everywhere in range
            return m0 - 1
    return None


def _verdict(metric: str, values: dict[str, float]) -> OrderingVerdict:
    ordered = sorted(values, key=values.__getitem__)
    vals = [values[k] for k in ordered]
    strict = all(a < b for a, b in zip(vals, vals[1:]))
    return OrderingVerdict(metric, tuple(_KIND_NAMES[k] for k in ordered), strict)


def ordering_m(lam: float, mu: float, nu: float) -> tuple[OrderingVerdict, OrderingVerdict]:
    """Rank the named service laws under Poisson decisions, for both metrics.

    Returns (age verdict, missing-probability verdict); in both, the
    expected order is deterministic < uniform < exponential.
    """
    _check_rates(lam=lam, mu=mu, nu=nu)
    auds = {k: aud_specialized_m(lam, mu, k) for k in ("U", "E", "D")}
    pmis = {k: pmis_mg11_m(lam, nu, service_model_for(k, mu))
            for k in ("U", "E", "D")}
    return _verdict("aud", auds), _verdict("missing_prob", pmis)

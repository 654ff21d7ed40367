"""Parameter sweeps pairing closed forms with simulation, emitted as CSV.

Each figure id names a canned comparison: an age-versus-load or
missing-probability-versus-decision-rate sweep across the three named
service laws, for the blocking and (where stable) FCFS infinite-buffer
disciplines, under Poisson or periodic decisions. Every row carries the
analytic value where a formula is in scope, the pooled simulation
estimate with its standard error, relative deviations, and a tolerance
flag. All cells of a sweep share the same base seed (common random
numbers), so re-running a sweep with the same spec is byte-identical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from . import formulas
from .formulas import EXACT, AnalyticReport
from .models import ArrivalModel, DecisionModel
from .sim import BLOCKING1, FCFS_INFINITE, SimRunConfig, SystemSpec, replicate

FIGURES = (
    "fig_aud_vs_rho_M",
    "fig_pmis_vs_nu_M",
    "fig_aud_vs_rho_D",
    "fig_pmis_vs_nu_D",
    "fig_decision_compare",
    "fig_summary_bar",
)

CSV_HEADER = ("swept,system,discipline,decision,analytic_aud,sim_aud,"
              "sim_aud_stderr,analytic_pmis,sim_pmis,sim_pmis_stderr,"
              "rel_dev_aud,rel_dev_pmis,pass")

_SYSTEM_LABEL = {"U": "uniform", "E": "exp", "D": "det"}

# Simulation decision rate for the age-versus-load Poisson sweep; the
# Poisson-decision age is rate-independent, so any value works.
_NU_FOR_AUD_SWEEP = 1.0


@dataclass(frozen=True)
class TolerancePolicy:
    """Pass bands: k standard errors for exact rows, a relative band for
    approximate rows (which may also pass inside the stderr band, since
    simulation noise rides on top of the approximation gap)."""

    stderr_k: float = 5.0
    approx_rel_band: float = 0.05


@dataclass(frozen=True)
class SweepSpec:
    """A sweep: figure, fixed parameters, grid, and simulation budget.

    ``rho``/``m0``/``grid`` default per figure when left None. Grids are
    load values for the *_vs_rho figures and decision-slot multiples
    (m0, swept as nu = m0*mu) for the periodic-decision figures.
    """

    figure_id: str
    mu: float = 1.5
    rho: Optional[float] = None
    m0: Optional[int] = None
    grid: Optional[tuple[float, ...]] = None
    horizon: int = 100_000
    n_reps: int = 4
    seed: int = 7
    warmup: int = 1000

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURES:
            raise ValueError(f"unknown figure id: {self.figure_id!r}")
        if self.horizon <= self.warmup or self.n_reps < 1:
            raise ValueError("simulation budget must be positive")
        if self.grid is not None:
            if not all(b > a for a, b in zip(self.grid, self.grid[1:])):
                raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class SweepRow:
    """One grid point for one system variant, analytic vs simulated."""

    swept: float
    system: str          # uniform | exp | det
    discipline: str      # blocking1 | fcfs
    decision: str        # poisson | periodic
    analytic_aud: Optional[float]
    aud_exact: bool
    sim_aud: float
    sim_aud_stderr: float
    analytic_pmis: Optional[float]
    pmis_exact: bool
    sim_pmis: float
    sim_pmis_stderr: float
    n_successful: int
    passed: bool
    error: Optional[str] = None

    @property
    def rel_dev_aud(self) -> Optional[float]:
        if self.analytic_aud is None or math.isnan(self.sim_aud):
            return None
        return abs(self.sim_aud - self.analytic_aud) / abs(self.analytic_aud)

    @property
    def rel_dev_pmis(self) -> Optional[float]:
        if self.analytic_pmis is None or math.isnan(self.sim_pmis):
            return None
        if self.analytic_pmis == 0.0:
            return 0.0 if self.sim_pmis == 0.0 else float("inf")
        return abs(self.sim_pmis - self.analytic_pmis) / self.analytic_pmis


def default_grid(figure_id: str) -> tuple[float, ...]:
    if figure_id in ("fig_aud_vs_rho_M", "fig_aud_vs_rho_D"):
        return tuple(round(0.1 * i, 10) for i in range(1, 31))
    if figure_id == "fig_pmis_vs_nu_M":
        return tuple(round(0.5 * i, 10) for i in range(1, 21))
    if figure_id in ("fig_pmis_vs_nu_D", "fig_decision_compare"):
        return tuple(float(m0) for m0 in range(1, 11))
    return (2.0,)  # fig_summary_bar: single decision-slot multiple


def resolve(spec: SweepSpec) -> SweepSpec:
    """Fill per-figure defaults for rho, m0 and the grid."""
    rho = spec.rho if spec.rho is not None else \
        (0.6 if spec.figure_id == "fig_summary_bar" else 0.5)
    m0 = spec.m0 if spec.m0 is not None else 30
    grid = spec.grid if spec.grid is not None else default_grid(spec.figure_id)
    return replace(spec, rho=rho, m0=m0, grid=grid)


def _pmis_periodic(lam: float, mu: float, m0: int, kind: str) -> AnalyticReport:
    """Periodic missing probability, stepping around the rho=1 singularity.

    The exponential-service expression has a removable singularity at
    rho=1; the sweep evaluates the formula at a load perturbed by 1e-6,
    which is far below every tolerance band in use.
    """
    if formulas.kind_letter(kind) == "E" and abs(lam / mu - 1.0) < 1e-9:
        lam = mu * (1.0 + 1e-6)
    return formulas.pmis_mg11_d(lam, mu, m0, kind)


@dataclass(frozen=True)
class _Cell:
    swept: float
    kind: str            # U | E | D
    discipline: str
    decision_kind: str
    lam: float
    mu: float
    nu: float
    m0: Optional[int]
    analytic_aud: Optional[float]
    aud_exact: bool
    analytic_pmis: Optional[float]
    pmis_exact: bool


def _cell(swept, kind, discipline, decision_kind, lam, mu, nu, m0) -> _Cell:
    """Attach every in-scope closed form to a sweep cell."""
    service = formulas.service_model_for(kind, mu)
    aud = pmis = None
    aud_exact = pmis_exact = True
    if discipline == BLOCKING1 and decision_kind == "poisson":
        aud = formulas.aud_mg11_m(lam, service).avg_aud
        pmis = formulas.pmis_mg11_m(lam, nu, service)
    elif discipline == BLOCKING1 and decision_kind == "periodic":
        report = formulas.aud_specialized_d(lam, mu, m0, kind)
        aud, aud_exact = report.avg_aud, report.exactness == EXACT
        report = _pmis_periodic(lam, mu, m0, kind)
        pmis, pmis_exact = report.missing_prob, report.exactness == EXACT
    elif discipline == FCFS_INFINITE and decision_kind == "poisson":
        # No closed-form age for the buffered queue is in scope.
        pmis = formulas.pmis_mg1_m_infinite(lam, nu, lam / mu, service)
    # FCFS + periodic: simulation only.
    return _Cell(swept, kind, discipline, decision_kind, lam, mu, nu, m0,
                 aud, aud_exact, pmis, pmis_exact)


def _cells(spec: SweepSpec) -> Iterable[_Cell]:
    mu = spec.mu
    fid = spec.figure_id
    if fid in ("fig_aud_vs_rho_M", "fig_aud_vs_rho_D"):
        periodic = fid.endswith("_D")
        nu = spec.m0 * mu if periodic else _NU_FOR_AUD_SWEEP
        dec = "periodic" if periodic else "poisson"
        m0 = spec.m0 if periodic else None
        for rho in spec.grid:
            for kind in ("U", "E", "D"):
                yield _cell(rho, kind, BLOCKING1, dec, rho * mu, mu, nu, m0)
                if rho < 1.0:
                    yield _cell(rho, kind, FCFS_INFINITE, dec, rho * mu, mu, nu, m0)
    elif fid == "fig_pmis_vs_nu_M":
        lam = spec.rho * mu
        for nu in spec.grid:
            for kind in ("U", "E", "D"):
                yield _cell(nu, kind, BLOCKING1, "poisson", lam, mu, nu, None)
                yield _cell(nu, kind, FCFS_INFINITE, "poisson", lam, mu, nu, None)
    elif fid == "fig_pmis_vs_nu_D":
        lam = spec.rho * mu
        for m0f in spec.grid:
            m0 = int(m0f)
            nu = m0 * mu
            for kind in ("U", "E", "D"):
                yield _cell(nu, kind, BLOCKING1, "periodic", lam, mu, nu, m0)
                yield _cell(nu, kind, FCFS_INFINITE, "periodic", lam, mu, nu, m0)
    elif fid == "fig_decision_compare":
        lam = spec.rho * mu
        for m0f in spec.grid:
            m0 = int(m0f)
            nu = m0 * mu
            for kind in ("U", "E", "D"):
                yield _cell(nu, kind, BLOCKING1, "periodic", lam, mu, nu, m0)
                yield _cell(nu, kind, BLOCKING1, "poisson", lam, mu, nu, None)
    else:  # fig_summary_bar
        lam = spec.rho * mu
        m0 = int(spec.grid[0])
        nu = m0 * mu
        for kind in ("U", "E", "D"):
            for discipline in (BLOCKING1, FCFS_INFINITE):
                for dec in ("poisson", "periodic"):
                    yield _cell(nu, kind, discipline, dec, lam, mu, nu,
                                m0 if dec == "periodic" else None)


def _null_stderr(p: Optional[float], n: int) -> float:
    """Standard error of a proportion estimator under the analytic value."""
    if p is None or n <= 0:
        return 0.0
    return math.sqrt(p * (1.0 - p) / n)


def row_within_tolerance(row: SweepRow, policy: TolerancePolicy) -> tuple[bool, list[str]]:
    """Check a row against the policy; returns (ok, failed metric names)."""
    failed = []
    if row.error is not None:
        return False, ["error"]
    if row.analytic_aud is not None:
        dev = abs(row.sim_aud - row.analytic_aud)
        band = policy.stderr_k * row.sim_aud_stderr
        ok = dev <= band
        if not row.aud_exact:
            ok = ok or (row.rel_dev_aud <= policy.approx_rel_band)
        if math.isnan(row.sim_aud):
            ok = False
        if not ok:
            failed.append("aud")
    if row.analytic_pmis is not None:
        dev = abs(row.sim_pmis - row.analytic_pmis)
        stderr = row.sim_pmis_stderr if not math.isnan(row.sim_pmis_stderr) else 0.0
        band = policy.stderr_k * max(stderr,
                                     _null_stderr(row.analytic_pmis,
                                                  row.n_successful))
        ok = dev <= band
        if not row.pmis_exact:
            ok = ok or (row.rel_dev_pmis <= policy.approx_rel_band)
        if math.isnan(row.sim_pmis):
            ok = False
        if not ok:
            failed.append("pmis")
    return not failed, failed


def run_sweep(spec: SweepSpec,
              policy: TolerancePolicy = TolerancePolicy()) -> list[SweepRow]:
    """Execute a sweep: one simulated row per grid point per system variant.

    Per-row failures (e.g. an out-of-domain parameter) are recorded in
    the row and the sweep continues.
    """
    spec = resolve(spec)
    rows: list[SweepRow] = []
    for cell in _cells(spec):
        try:
            system = SystemSpec(
                arrival=ArrivalModel(cell.lam),
                service=formulas.service_model_for(cell.kind, cell.mu),
                decision=(DecisionModel.poisson(cell.nu)
                          if cell.decision_kind == "poisson"
                          else DecisionModel.periodic(cell.nu)),
                discipline=cell.discipline,
            )
            config = SimRunConfig(system, horizon=spec.horizon,
                                  warmup=spec.warmup, seed=spec.seed)
            est = replicate(config, spec.n_reps)
            row = SweepRow(
                swept=cell.swept, system=_SYSTEM_LABEL[cell.kind],
                discipline=cell.discipline, decision=cell.decision_kind,
                analytic_aud=cell.analytic_aud, aud_exact=cell.aud_exact,
                sim_aud=est.avg_aud, sim_aud_stderr=est.aud_stderr,
                analytic_pmis=cell.analytic_pmis, pmis_exact=cell.pmis_exact,
                sim_pmis=est.missing_prob, sim_pmis_stderr=est.pmis_stderr,
                n_successful=est.n_successful, passed=False,
            )
            ok, _ = row_within_tolerance(row, policy)
            rows.append(replace(row, passed=ok))
        except (ValueError, RuntimeError) as exc:
            rows.append(SweepRow(
                swept=cell.swept, system=_SYSTEM_LABEL[cell.kind],
                discipline=cell.discipline, decision=cell.decision_kind,
                analytic_aud=cell.analytic_aud, aud_exact=cell.aud_exact,
                sim_aud=float("nan"), sim_aud_stderr=float("nan"),
                analytic_pmis=cell.analytic_pmis, pmis_exact=cell.pmis_exact,
                sim_pmis=float("nan"), sim_pmis_stderr=float("nan"),
                n_successful=0, passed=False, error=str(exc)))
    return rows


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(float(value))


def emit_csv(rows: Iterable[SweepRow], path: str) -> None:
    """Write rows as CSV with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for row in rows:
            writer.writerow([
                _fmt(row.swept), row.system, row.discipline, row.decision,
                _fmt(row.analytic_aud), _fmt(row.sim_aud),
                _fmt(row.sim_aud_stderr), _fmt(row.analytic_pmis),
                _fmt(row.sim_pmis), _fmt(row.sim_pmis_stderr),
                _fmt(row.rel_dev_aud), _fmt(row.rel_dev_pmis),
                "true" if row.passed else "false",
            ])


@dataclass(frozen=True)
class VerifyReport:
    """Aggregated tolerance outcome of one sweep."""

    figure_id: str
    n_rows: int
    n_failed: int
    failures: tuple[str, ...]
    max_approx_gap_aud: float
    max_approx_gap_pmis: float

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def summary(self) -> str:
        lines = [f"{self.figure_id}: "
                 f"{'pass' if self.passed else 'FAIL'} "
                 f"({self.n_rows - self.n_failed}/{self.n_rows} rows in tolerance)"]
        if not math.isnan(self.max_approx_gap_aud):
            lines.append(f"  max approximation gap, age: "
                         f"{self.max_approx_gap_aud:.4%}")
        if not math.isnan(self.max_approx_gap_pmis):
            lines.append(f"  max approximation gap, missing prob: "
                         f"{self.max_approx_gap_pmis:.4%}")
        for name in self.failures:
            lines.append(f"  out of tolerance: {name}")
        return "\n".join(lines)


def verify(figure_id: str, rows: list[SweepRow],
           policy: TolerancePolicy = TolerancePolicy()) -> VerifyReport:
    """Re-check every row of a completed sweep against a tolerance policy.

    Approximate rows also report the largest observed relative gap, which
    measures the quality of the uniform-decision-epoch surrogate.
    """
    n_failed = 0
    failures: list[str] = []
    gaps_aud: list[float] = []
    gaps_pmis: list[float] = []
    for row in rows:
        ok, failed_metrics = row_within_tolerance(row, policy)
        if not ok:
            n_failed += 1
            failures.append(
                f"swept={row.swept:g} {row.system}/{row.discipline}/"
                f"{row.decision}: {','.join(failed_metrics)}"
                + (f" ({row.error})" if row.error else ""))
        if row.analytic_aud is not None and not row.aud_exact \
                and row.rel_dev_aud is not None:
            gaps_aud.append(row.rel_dev_aud)
        if row.analytic_pmis is not None and not row.pmis_exact \
                and row.rel_dev_pmis is not None \
                and math.isfinite(row.rel_dev_pmis):
            gaps_pmis.append(row.rel_dev_pmis)
    return VerifyReport(
        figure_id=figure_id, n_rows=len(rows), n_failed=n_failed,
        failures=tuple(failures),
        max_approx_gap_aud=max(gaps_aud) if gaps_aud else float("nan"),
        max_approx_gap_pmis=max(gaps_pmis) if gaps_pmis else float("nan"),
    )

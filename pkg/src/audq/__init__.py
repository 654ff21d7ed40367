"""Age-upon-decisions toolkit for bufferless update-and-decision queues.

Closed-form average age and missing probability for the length-1
blocking M/G/1/1 queue under Poisson or periodic decisions, an exact
discrete-event simulator of the same system (plus the FCFS
infinite-buffer baseline), and sweep experiments pairing the two.
"""

from .formulas import (EXACT, UNIFORM_EPOCH_APPROX, AnalyticReport,
                       DecisionCountMoments, OrderingVerdict, aud_mg11_d_general,
                       aud_mg11_m, aud_specialized_d, aud_specialized_m,
                       decision_count_moments, find_m0_star, kind_letter,
                       ordering_m, pmis_mg1_m_infinite, pmis_mg11_d,
                       pmis_mg11_m, service_model_for)
from .models import (ArrivalModel, DecisionModel, RngStream, ServiceModel,
                     sample, sample_n, service_mgf_neg, service_moments)
from .sim import (BLOCKING1, FCFS_INFINITE, EventTrace, SimEstimate,
                  SimRunConfig, SystemSpec, replicate, run, trace)
from .sweeps import (CSV_HEADER, FIGURES, SweepRow, SweepSpec, TolerancePolicy,
                     VerifyReport, emit_csv, run_sweep, verify)

__version__ = "0.1.0"

__all__ = [
    "AnalyticReport", "ArrivalModel", "BLOCKING1", "CSV_HEADER",
    "DecisionCountMoments", "DecisionModel", "EXACT", "EventTrace",
    "FCFS_INFINITE", "FIGURES", "OrderingVerdict", "RngStream",
    "ServiceModel", "SimEstimate", "SimRunConfig", "SweepRow", "SweepSpec",
    "SystemSpec", "TolerancePolicy", "UNIFORM_EPOCH_APPROX", "VerifyReport",
    "aud_mg11_d_general", "aud_mg11_m", "aud_specialized_d",
    "aud_specialized_m", "decision_count_moments", "emit_csv", "find_m0_star",
    "kind_letter", "ordering_m", "pmis_mg1_m_infinite", "pmis_mg11_d",
    "pmis_mg11_m", "replicate", "run", "run_sweep", "sample", "sample_n",
    "service_mgf_neg", "service_model_for", "service_moments", "trace",
    "verify",
]

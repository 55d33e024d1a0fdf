"""Audit how many samples must be removed to flip the sign of an OLS coefficient.

Lower bounds come from the spectral bound and from branch-and-bound on the
bilinear weight program; upper bounds come from influence heuristics and are
always verified by refitting.  Binary-treatment and two-period
difference-in-differences designs have exact, near-linear-time auditors.
"""

from .certificates import (NoFlipFound, NoFlipPossible, NoFlipWithin, StabilityCertificate, is_flipped,
                           oriented_refit)
from .data import (BinaryTreatmentView, Dataset, DiDPanel, DiDView, binary_view, did_design, did_view,
                   load_csv, load_did_csv, synth_2d, synth_4d, write_csv)
from .estimators import (ExactBinaryAuditor, ExactDiDAuditor, InfluenceAuditor, MIQCPAuditor, OracleAuditor,
                         SpectralAuditor)
from .exact_binary import audit_binary, binary_removal_set
from .exact_did import audit_did, did_removal_set
from .influence import amip_upper_bound, greedy_resolve_upper_bound, influence_scores, loo_effects
from .oracle import brute_force_did, brute_force_stability
from .spectral import spectral_lower_bound

__version__ = "0.1.0"

__all__ = [
    "BinaryTreatmentView", "Dataset", "DiDPanel", "DiDView", "ExactBinaryAuditor", "ExactDiDAuditor",
    "InfluenceAuditor", "MIQCPAuditor", "NoFlipFound", "NoFlipPossible", "NoFlipWithin", "OracleAuditor",
    "SpectralAuditor", "StabilityCertificate", "amip_upper_bound", "audit_binary", "audit_did",
    "binary_removal_set", "binary_view", "brute_force_did", "brute_force_stability", "did_design",
    "did_removal_set", "did_view", "greedy_resolve_upper_bound", "influence_scores", "is_flipped",
    "load_csv", "load_did_csv", "loo_effects", "oriented_refit", "spectral_lower_bound", "synth_2d",
    "synth_4d", "write_csv",
]

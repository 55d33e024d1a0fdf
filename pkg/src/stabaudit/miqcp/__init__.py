"""Bilinear-program audits: model, McCormick relaxation, branch-and-bound and MPS export."""

from .bnb import BnBNode, BnBResult, branch_and_bound, fractional_incumbent, round_and_verify
from .lp import LinearProgram, LPResult, solve_lp
from .model import BilinearModel, build_model, default_beta_box
from .mps import export_mps, read_mps
from .relaxation import envelope, mccormick_relax

__all__ = [
    "BilinearModel", "BnBNode", "BnBResult", "LPResult", "LinearProgram", "branch_and_bound",
    "build_model", "default_beta_box", "envelope", "export_mps", "read_mps", "fractional_incumbent", "mccormick_relax",
    "round_and_verify", "solve_lp",
]

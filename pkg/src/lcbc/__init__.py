"""Linear computation broadcast: subspace decomposition, load LP and scheme synthesis."""
from .field import FieldSpec, make_field
from .matrix import MatrixGF, SubspaceBasis, conditional_rank, rank, span
from .instance import LcbcInstance, InvalidInstance
from .decomp import Label, build_atlas, enumerate_labels, ls_of, cover
from .scheme import (
    build_lp, construct_messages, plan_instance, solve_instance, verify_decodability,
)

__all__ = [
    "FieldSpec", "make_field", "MatrixGF", "SubspaceBasis", "conditional_rank", "rank",
    "span", "LcbcInstance", "InvalidInstance", "Label", "build_atlas", "enumerate_labels",
    "ls_of", "cover", "build_lp", "solve_instance", "construct_messages", "verify_decodability",
    "plan_instance",
]

__version__ = "0.1.0"

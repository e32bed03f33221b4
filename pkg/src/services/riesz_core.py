"""Order operations on the finite vector lattice R^d.

Only max and negation are used, so the Riesz decomposition identities hold exactly in
floating point.
"""

import numpy as np

from ..models.lattice import LatticeVector
from ..utils.errors import StructuralError


def _check_dims(x: LatticeVector, y: LatticeVector):
    if x.dim != y.dim:
        raise StructuralError(f"dimension mismatch: {x.dim} != {y.dim}")


def join(x: LatticeVector, y: LatticeVector) -> LatticeVector:
    """Componentwise supremum x v y"""
    _check_dims(x, y)
    return LatticeVector(values=np.maximum(x.values, y.values))


def meet(x: LatticeVector, y: LatticeVector) -> LatticeVector:
    """Componentwise infimum, written through join so only max is used"""
    return negate(join(negate(x), negate(y)))


def negate(x: LatticeVector) -> LatticeVector:
    return LatticeVector(values=-x.values)


def add(x: LatticeVector, y: LatticeVector) -> LatticeVector:
    _check_dims(x, y)
    return LatticeVector(values=x.values + y.values)


def scale(c: float, x: LatticeVector) -> LatticeVector:
    return LatticeVector(values=c * x.values)


def abs_val(x: LatticeVector) -> LatticeVector:
    """|x| = x v (-x)"""
    return join(x, negate(x))


def positive_part(x: LatticeVector) -> LatticeVector:
    return join(x, LatticeVector.zeros(x.dim))


def negative_part(x: LatticeVector) -> LatticeVector:
    return join(negate(x), LatticeVector.zeros(x.dim))


def leq(x: LatticeVector, y: LatticeVector) -> bool:
    """Exact componentwise order; a partial order, so both directions may be False"""
    _check_dims(x, y)
    return bool(np.all(x.values <= y.values))


def unit_dominance(x: LatticeVector) -> float:
    """Smallest c >= 0 with |x| <= c e"""
    return float(np.max(abs_val(x).values))

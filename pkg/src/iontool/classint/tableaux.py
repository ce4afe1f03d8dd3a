"""Butcher tableaux."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class ButcherTableau:
    """Runge-Kutta coefficients.

    Parameters
    ----------
    a : (s, s) array
        Stage matrix.
    b : (s,) array
        Propagation weights.
    c : (s,) array
        Nodes; must equal the row sums of ``a``.
    b_err : (s,) array, optional
        Embedded weights; the local error estimate is ``h sum (b - b_err) k``.
    order : int
        Order of the propagating weights.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    b_err: np.ndarray | None = None
    order: int = 0
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.size
        if a.shape != (s, s) or c.shape != (s,):
            raise InvalidArgumentError("inconsistent tableau shapes")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-12:
            raise InvalidArgumentError("tableau violates c_i = sum_j a_ij")
        if abs(b.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("tableau weights do not sum to one")
        if self.b_err is not None:
            be = np.asarray(self.b_err, dtype=float)
            if be.shape != (s,) or abs(be.sum() - 1.0) > 1e-12:
                raise InvalidArgumentError("embedded weights malformed")
            object.__setattr__(self, "b_err", be)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size

    @property
    def explicit(self) -> bool:
        return bool(np.all(np.triu(self.a) == 0.0))


def _f(rows):
    return np.array([[float(v) for v in r] for r in rows])


# Dormand-Prince 5(4).  The 35/384 row is the fifth-order solution (it also
# appears as the last stage row, so the pair is first-same-as-last); the
# 5179/57600 row is the embedded fourth-order solution.
_DP_A = [
    [0, 0, 0, 0, 0, 0, 0],
    [Fr(1, 5), 0, 0, 0, 0, 0, 0],
    [Fr(3, 40), Fr(9, 40), 0, 0, 0, 0, 0],
    [Fr(44, 45), Fr(-56, 15), Fr(32, 9), 0, 0, 0, 0],
    [Fr(19372, 6561), Fr(-25360, 2187), Fr(64448, 6561), Fr(-212, 729), 0, 0, 0],
    [Fr(9017, 3168), Fr(-355, 33), Fr(46732, 5247), Fr(49, 176), Fr(-5103, 18656), 0, 0],
    [Fr(35, 384), 0, Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84), 0],
]
_DP_B5 = [Fr(35, 384), 0, Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84), 0]
_DP_B4 = [Fr(5179, 57600), 0, Fr(7571, 16695), Fr(393, 640), Fr(-92097, 339200), Fr(187, 2100), Fr(1, 40)]
_DP_C = [0, Fr(1, 5), Fr(3, 10), Fr(4, 5), Fr(8, 9), 1, 1]

DORMAND_PRINCE = ButcherTableau(_f(_DP_A), _f([_DP_B5])[0], _f([_DP_C])[0], b_err=_f([_DP_B4])[0],
                                order=5, name="dormand-prince-5(4)")

EULER = ButcherTableau(np.zeros((1, 1)), np.ones(1), np.zeros(1), order=1, name="euler")
MIDPOINT = ButcherTableau(np.full((1, 1), 0.5), np.ones(1), np.full(1, 0.5), order=2, name="implicit-midpoint")
RK4 = ButcherTableau(
    np.array([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]], float),
    np.array([1, 2, 2, 1], float) / 6, np.array([0, 0.5, 0.5, 1.0]), order=4, name="rk4")


@dataclass(frozen=True)
class PartitionedTableau:
    """Pair of tableaux: ``pos`` for positions, ``vel`` for velocities."""

    pos: ButcherTableau
    vel: ButcherTableau
    order: int = 0
    name: str = ""

    def __post_init__(self):
        if self.pos.stages != self.vel.stages:
            raise InvalidArgumentError("partitioned tableaux need equal stage counts")


LOBATTO_IIIA_IIIB_3 = PartitionedTableau(
    ButcherTableau(_f([[0, 0, 0], [Fr(5, 24), Fr(1, 3), Fr(-1, 24)], [Fr(1, 6), Fr(2, 3), Fr(1, 6)]]),
                   _f([[Fr(1, 6), Fr(2, 3), Fr(1, 6)]])[0], np.array([0.0, 0.5, 1.0]), order=4,
                   name="lobatto-IIIA-3"),
    ButcherTableau(_f([[Fr(1, 6), Fr(-1, 6), 0], [Fr(1, 6), Fr(1, 3), 0], [Fr(1, 6), Fr(5, 6), 0]]),
                   _f([[Fr(1, 6), Fr(2, 3), Fr(1, 6)]])[0], np.array([0.0, 0.5, 1.0]), order=4,
                   name="lobatto-IIIB-3"),
    order=4, name="lobatto-IIIA-IIIB-3",
)

"""Composite Hilbert spaces and sparse operator algebra.

Collective spin operators follow the Pauli-sum normalization
``J^a = sum_n sigma_n^a``. On a ladder ``|j, m>`` this gives

* ``J^z |j, m> = 2m |j, m>`` (integer spectrum from ``-2j`` to ``2j``),
* ``J^- |j, m> = sqrt(j(j+1) - m(m-1)) |j, m-1>``,
* ``J^x = J^+ + J^-``.

Textbook angular momentum operators are ``J^a / 2``. With this choice
``[J^z, J^+-] = +-2 J^+-`` and ``[J^+, J^-] = J^z``.

Basis ordering:

* ``TwoLevel``: index 0 is ``|0>`` (ground), index 1 is ``|1>``.
* ``BosonMode``: index n is the Fock state ``|n>``.
* ``SpinLadder``: index i is ``|j, m = -j + i>``, lowest weight first.

Composite indices are row-major over the declared factor order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import comb, isclose
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "TwoLevel",
    "BosonMode",
    "SpinLadder",
    "CompositeSpace",
    "Operator",
    "SpaceMismatchError",
    "FactorKindError",
    "collective_operator",
    "boson_operator",
    "qubit_operator",
    "lowering_operator",
    "circuit_commutator",
    "identity",
    "commutator",
    "basis_state",
    "spin_multiplicities",
]

Number = Union[int, float, complex]


class SpaceMismatchError(ValueError):
    """Operands live on different composite spaces."""


class FactorKindError(TypeError):
    """An operator was requested on a factor of the wrong kind."""


def _half_integer(value: float, name: str) -> Fraction:
    twice = 2 * value
    if not isclose(twice, round(twice), abs_tol=1e-12):
        raise ValueError(f"{name}={value} is not a half-integer")
    return Fraction(round(twice), 2)


@dataclass(frozen=True)
class TwoLevel:
    label: str

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class BosonMode:
    label: str
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class SpinLadder:
    """The ``|j, m>`` ladder of a homogeneous ensemble sector.

    ``levels`` optionally keeps only the lowest ``levels`` states
    (``m = -j ... -j + levels - 1``); matrix elements inside the kept
    block are exact.
    """

    label: str
    j: float
    levels: int | None = None

    def __post_init__(self):
        if self.j < 0:
            raise ValueError(f"j must be >= 0, got {self.j}")
        _half_integer(self.j, "j")
        if self.levels is not None and not 1 <= self.levels <= self.full_dim:
            raise ValueError(f"levels must lie in [1, {self.full_dim}]")

    @property
    def full_dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def dim(self) -> int:
        return self.full_dim if self.levels is None else self.levels

    @property
    def m_values(self) -> np.ndarray:
        return -self.j + np.arange(self.dim, dtype=float)

    def index_of(self, m: float) -> int:
        idx = m + self.j
        if not isclose(idx, round(idx), abs_tol=1e-9) or not 0 <= round(idx) < self.dim:
            raise ValueError(f"m={m} is not a retained state of ladder j={self.j}")
        return int(round(idx))


Factor = Union[TwoLevel, BosonMode, SpinLadder]


@dataclass(frozen=True)
class CompositeSpace:
    factors: tuple[Factor, ...]

    def __init__(self, factors: Iterable[Factor]):
        factors = tuple(factors)
        labels = [f.label for f in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"factor labels must be unique: {labels}")
        if not factors:
            raise ValueError("a composite space needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor labelled {label!r} in {self.labels}") from None

    def factor(self, label: str) -> Factor:
        return self.factors[self.position(label)]

    def index(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.dims))

    def multi_index(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.dims))

    def embed(self, label: str, local: sp.spmatrix) -> "Operator":
        """Lift a single-factor matrix to the composite space."""
        pos = self.position(label)
        left = int(np.prod(self.dims[:pos]))
        right = int(np.prod(self.dims[pos + 1:]))
        mat = sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(local), format="csr")
        mat = sp.kron(mat, sp.identity(right, format="csr"), format="csr")
        return Operator(self, mat)


class Operator:
    """Immutable complex sparse matrix bound to a :class:`CompositeSpace`."""

    __slots__ = ("space", "_mat")

    def __init__(self, space: CompositeSpace, matrix):
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape != (space.dim, space.dim):
            raise ValueError(f"matrix shape {mat.shape} does not fit space dim {space.dim}")
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        mat.data.flags.writeable = False
        self.space = space
        self._mat = mat

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._mat

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def nnz(self) -> int:
        return self._mat.nnz

    def toarray(self) -> np.ndarray:
        return self._mat.toarray()

    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self._mat.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def _check(self, other: "Operator") -> None:
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space.labels} vs {other.space.labels}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self._mat + other._mat)
        if other == 0:
            return self
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Operator(self.space, -self._mat)

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self._mat - other._mat)
        return NotImplemented

    def __mul__(self, scalar: Number):
        if isinstance(scalar, Operator):
            return self @ scalar
        return Operator(self.space, self._mat * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number):
        return Operator(self.space, self._mat / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self._mat @ other._mat)
        return self._mat @ np.asarray(other)

    def dag(self) -> "Operator":
        return Operator(self.space, self._mat.conj().T)

    def hermiticity_error(self) -> float:
        diff = self._mat - self._mat.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= tol

    def norm(self) -> float:
        """Largest absolute entry (max-norm)."""
        return float(abs(self._mat).max()) if self._mat.nnz else 0.0

    def expect(self, state: np.ndarray) -> complex:
        state = np.asarray(state)
        if state.ndim == 1:
            return complex(np.vdot(state, self._mat @ state))
        return complex(np.sum(self._mat.multiply(state.T)))

    def __repr__(self) -> str:
        return f"Operator(labels={self.space.labels}, dims={self.space.dims}, nnz={self.nnz})"


def identity(space: CompositeSpace) -> Operator:
    return Operator(space, sp.identity(space.dim, format="csr"))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def _ladder_lowering(factor: SpinLadder) -> sp.csr_matrix:
    m = factor.m_values
    # J^- |j,m> has amplitude sqrt(j(j+1) - m(m-1)) on |j,m-1>, i.e. one index down
    amp = np.sqrt(np.maximum(factor.j * (factor.j + 1) - m[1:] * (m[1:] - 1), 0.0))
    return sp.diags(amp, 1, shape=(factor.dim, factor.dim), format="csr")


def _local_collective(factor: SpinLadder, which: str) -> sp.csr_matrix:
    lower = _ladder_lowering(factor)
    if which == "Jminus":
        return lower
    if which == "Jplus":
        return lower.T.tocsr()
    if which == "Jz":
        return sp.diags(2 * factor.m_values, 0, format="csr")
    if which == "Jx":
        return (lower + lower.T).tocsr()
    raise ValueError(f"unknown collective operator {which!r}")


def collective_operator(space: CompositeSpace, label: str, which: str) -> Operator:
    """Collective spin operator ``which`` in {Jplus, Jminus, Jz, Jx} on ladder ``label``."""
    factor = space.factor(label)
    if not isinstance(factor, SpinLadder):
        raise FactorKindError(f"factor {label!r} is {type(factor).__name__}, not SpinLadder")
    return space.embed(label, _local_collective(factor, which))


def boson_operator(space: CompositeSpace, label: str, which: str) -> Operator:
    """Truncated ladder operator ``which`` in {Create, Annihilate, Number}."""
    factor = space.factor(label)
    if not isinstance(factor, BosonMode):
        raise FactorKindError(f"factor {label!r} is {type(factor).__name__}, not BosonMode")
    a = sp.diags(np.sqrt(np.arange(1, factor.dim, dtype=float)), 1, format="csr")
    if which == "Annihilate":
        local = a
    elif which == "Create":
        local = a.T.tocsr()
    elif which == "Number":
        local = sp.diags(np.arange(factor.dim, dtype=float), 0, format="csr")
    else:
        raise ValueError(f"unknown boson operator {which!r}")
    return space.embed(label, local)


_PAULI = {
    "lower": np.array([[0, 1], [0, 0]]),
    "raise": np.array([[0, 0], [1, 0]]),
    "z": np.array([[-1, 0], [0, 1]]),
    "x": np.array([[0, 1], [1, 0]]),
    "number": np.array([[0, 0], [0, 1]]),
}


def qubit_operator(space: CompositeSpace, label: str, which: str) -> Operator:
    """Pauli-type operator on a two-level factor; ``z`` is ``|1><1| - |0><0|``."""
    factor = space.factor(label)
    if not isinstance(factor, TwoLevel):
        raise FactorKindError(f"factor {label!r} is {type(factor).__name__}, not TwoLevel")
    if which not in _PAULI:
        raise ValueError(f"unknown two-level operator {which!r}")
    return space.embed(label, sp.csr_matrix(_PAULI[which]))


def lowering_operator(space: CompositeSpace, label: str) -> Operator:
    """``x_m``: sigma^- for a two-level factor, ``a`` for a boson mode."""
    factor = space.factor(label)
    if isinstance(factor, TwoLevel):
        return qubit_operator(space, label, "lower")
    if isinstance(factor, BosonMode):
        return boson_operator(space, label, "Annihilate")
    raise FactorKindError(f"factor {label!r} has no circuit lowering operator")


def circuit_commutator(space: CompositeSpace, label: str) -> Operator:
    """Untruncated ``[x, x^dag]``: identity for a mode, ``-sigma^z`` for a qubit."""
    factor = space.factor(label)
    if isinstance(factor, TwoLevel):
        return -qubit_operator(space, label, "z")
    if isinstance(factor, BosonMode):
        return identity(space)
    raise FactorKindError(f"factor {label!r} has no circuit commutator")


def basis_state(space: CompositeSpace, levels: Mapping[str, float]) -> np.ndarray:
    """Product basis vector.

    ``levels`` maps labels to local indices; spin ladders take the magnetic
    number ``m`` instead. Unlisted factors sit in index 0.
    """
    unknown = set(levels) - set(space.labels)
    if unknown:
        raise KeyError(f"unknown factor labels {sorted(unknown)}")
    multi = []
    for factor in space.factors:
        value = levels.get(factor.label, None)
        if isinstance(factor, SpinLadder):
            multi.append(0 if value is None else factor.index_of(value))
        else:
            idx = 0 if value is None else int(value)
            if not 0 <= idx < factor.dim:
                raise ValueError(f"level {idx} out of range for {factor.label!r}")
            multi.append(idx)
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.index(multi)] = 1.0
    return vec


def spin_multiplicities(n_spins: int) -> dict[float, int]:
    """Number of copies of each ``j`` sector in ``n_spins`` spin-1/2 particles."""
    out = {}
    for k in range(n_spins // 2 + 1):
        j = n_spins / 2 - k
        mult = comb(n_spins, k) - (comb(n_spins, k - 1) if k else 0)
        if mult:
            out[j] = mult
    return out


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)

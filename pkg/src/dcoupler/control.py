"""Digital coupler register: pairwise ground/singlet states and pi-pulse toggles."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dynamics import apply_dissipator
from .model import CouplerModel, single_layer_rate
from .operators import CompositeSpace, SpinLadder, basis_state, collective_operator


class PairState(enum.Enum):
    GROUND = "g"
    SINGLET = "s"


class Direction(enum.Enum):
    RAISE = "raise"  # g -> s, m -> m + 1
    LOWER = "lower"  # s -> g, m -> m - 1


class InvalidTransitionError(ValueError):
    """A pulse was aimed at a pair in the wrong state for its direction."""


@dataclass(frozen=True)
class PairRegister:
    pairs: tuple[PairState, ...]

    def __init__(self, pairs: Iterable[PairState | str]):
        object.__setattr__(self, "pairs", tuple(PairState(p) for p in pairs))

    @classmethod
    def ground(cls, n_qubits: int) -> "PairRegister":
        if n_qubits % 2:
            raise ValueError("a pair register needs an even number of qubits")
        return cls([PairState.GROUND] * (n_qubits // 2))

    @property
    def n_qubits(self) -> int:
        return 2 * len(self.pairs)

    @property
    def singlets(self) -> int:
        return sum(p is PairState.SINGLET for p in self.pairs)

    @property
    def j(self) -> float:
        return (self.n_qubits - 2 * self.singlets) / 2

    @property
    def m(self) -> float:
        return -self.j

    @property
    def jz(self) -> int:
        return -(self.n_qubits - 2 * self.singlets)

    def __str__(self) -> str:
        return "".join(p.value for p in self.pairs)


@dataclass(frozen=True)
class PulseCommand:
    targets: frozenset[int]
    direction: Direction

    def __init__(self, targets: Iterable[int], direction: Direction | str):
        targets = list(targets)
        if len(set(targets)) != len(targets):
            raise ValueError("pulse targets must be distinct")
        object.__setattr__(self, "targets", frozenset(targets))
        object.__setattr__(self, "direction", Direction(direction))


def apply_pulses(register: PairRegister, cmd: PulseCommand) -> PairRegister:
    """Toggle every targeted pair in one step; the input register is untouched."""
    source = PairState.GROUND if cmd.direction is Direction.RAISE else PairState.SINGLET
    target = PairState.SINGLET if cmd.direction is Direction.RAISE else PairState.GROUND
    pairs = list(register.pairs)
    for idx in sorted(cmd.targets):
        if not 0 <= idx < len(pairs):
            raise IndexError(f"pair index {idx} outside register of {len(pairs)} pairs")
        if pairs[idx] is not source:
            raise InvalidTransitionError(
                f"{cmd.direction.value} pulse on pair {idx} in state {pairs[idx].name}"
            )
    for idx in cmd.targets:
        pairs[idx] = target
    return PairRegister(pairs)


def register_to_geff(register: PairRegister, model: CouplerModel) -> float:
    """Exchange rate (rad/us) set by the register's collective sector."""
    if model.layers != 1:
        raise ValueError("the digital register drives a single-layer coupler")
    if register.n_qubits != model.n_qubits:
        raise ValueError(f"register holds {register.n_qubits} qubits, model {model.n_qubits}")
    return single_layer_rate(model, jz=register.jz)


@dataclass(frozen=True)
class SubradianceReport:
    j: float
    m: float
    lowering_norm: float
    decay_image_norm: float
    dephasing_image_norm: float
    pair_lowering_norm: float
    pair_image_norm: float

    @property
    def max_norm(self) -> float:
        return max(self.lowering_norm, self.decay_image_norm, self.dephasing_image_norm,
                   self.pair_lowering_norm, self.pair_image_norm)

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_norm < tol


_SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)  # (|10> - |01>)/sqrt(2), basis |q0 q1>
_PAIR_LOWER = np.kron([[0, 1], [0, 0]], np.eye(2)) + np.kron(np.eye(2), [[0, 1], [0, 0]])


def verify_subradiance(register: PairRegister, gamma: float = 1.0,
                       gamma_phi: float = 1.0) -> SubradianceReport:
    """Dissipator images of the register's collective state and of one singlet pair.

    Norms are Frobenius norms of ``(rate/2) D[L] rho``.
    """
    space = CompositeSpace([SpinLadder("c", register.j)])
    psi = basis_state(space, {"c": register.m})
    rho = np.outer(psi, psi.conj())
    jm = collective_operator(space, "c", "Jminus")
    jz = collective_operator(space, "c", "Jz")
    lower = float(np.linalg.norm(jm @ psi))
    decay = 0.5 * gamma * float(np.linalg.norm(apply_dissipator(jm, rho)))
    dephase = 0.5 * gamma_phi * float(np.linalg.norm(apply_dissipator(jz, rho)))

    pair_rho = np.outer(_SINGLET, _SINGLET.conj())
    pair_lower = float(np.linalg.norm(_PAIR_LOWER @ _SINGLET))
    L = _PAIR_LOWER
    pair_image = 2 * L @ pair_rho @ L.conj().T - L.conj().T @ L @ pair_rho - pair_rho @ L.conj().T @ L
    report = SubradianceReport(register.j, register.m, lower, decay, dephase, pair_lower,
                               0.5 * gamma * float(np.linalg.norm(pair_image)))
    assert report.max_norm < 1e-9, f"register {register} mapped to a non-subradiant state"
    return report

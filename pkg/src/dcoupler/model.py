"""Coupler models, full and effective Hamiltonians, closed-form rates.

Frequencies are angular, in rad/us (``omega = 2*pi*f`` with ``f`` in MHz);
times are in microseconds. Circuit elements are indexed 1 and 2; the
coupler's magnetic number is stored separately as ``m`` so the two never
collide.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from math import isclose, pi, sqrt

import numpy as np

from .operators import (
    BosonMode,
    CompositeSpace,
    Operator,
    SpinLadder,
    TwoLevel,
    boson_operator,
    circuit_commutator,
    collective_operator,
    identity,
    lowering_operator,
)

TWO_PI = 2 * pi
DISPERSIVE_LIMIT = 0.3
RWA_WARN_RATIO = 0.05
DEFAULT_BOSON_LEVELS = 4


def from_mhz(f_mhz: float) -> float:
    return TWO_PI * f_mhz


def to_mhz(omega: float) -> float:
    return omega / TWO_PI


class DispersiveValidityError(ValueError):
    """Coupling-to-detuning ratio is outside the dispersive regime."""


class SingularDenominatorError(ZeroDivisionError):
    """A perturbative denominator vanishes."""


@dataclass(frozen=True)
class CircuitElement:
    kind: str  # "qubit" or "resonator"
    omega: float
    n_max: int = 3

    def __post_init__(self):
        if self.kind not in ("qubit", "resonator"):
            raise ValueError(f"unknown circuit kind {self.kind!r}")
        if not self.omega > 0:
            raise ValueError(f"circuit frequency must be positive, got {self.omega}")

    def factor(self, label: str):
        return TwoLevel(label) if self.kind == "qubit" else BosonMode(label, self.n_max)


def _ratio(g: float, denom: float) -> float:
    if g == 0:
        return 0.0
    return abs(g / denom) if denom != 0 else float("inf")


@dataclass(frozen=True)
class CouplerModel:
    """Two circuit elements coupled through ``layers`` ensembles of ``n_qubits`` each.

    ``j`` and ``m`` select the collective sector of every layer; they default
    to the all-ground state ``j = N/2, m = -N/2``.
    """

    x1: CircuitElement
    x2: CircuitElement
    omega_c: float
    n_qubits: int
    g1: float
    g2: float
    g_c: float = 0.0
    layers: int = 1
    interaction: str = "XY"
    j: float | None = None
    m: float | None = None

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValueError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        if self.n_qubits % 2:
            warnings.warn(
                f"odd ensemble size N={self.n_qubits}: the coupling cannot be switched fully off",
                stacklevel=3,
            )
        if int(self.layers) != self.layers or self.layers < 1:
            raise ValueError(f"layers must be an integer >= 1, got {self.layers}")
        if self.interaction not in ("XY", "Ising"):
            raise ValueError(f"interaction must be 'XY' or 'Ising', got {self.interaction!r}")
        if not self.omega_c > 0:
            raise ValueError("coupler frequency must be positive")
        j = self.n_qubits / 2 if self.j is None else float(self.j)
        m = -j if self.m is None else float(self.m)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "m", m)
        if j > self.n_qubits / 2 + 1e-12 or not isclose((self.n_qubits / 2 - j) % 1, 0, abs_tol=1e-9):
            raise ValueError(f"j={j} is not a sector of N={self.n_qubits} spins")
        if abs(m) > j + 1e-12 or not isclose((j - m) % 1, 0, abs_tol=1e-9):
            raise ValueError(f"m={m} is not a magnetic number of j={j}")
        report = dispersive_report(self)
        for idx in (1, 2):
            ratio = report[f"g{idx}_over_delta"]
            if ratio > DISPERSIVE_LIMIT:
                raise DispersiveValidityError(
                    f"|g{idx}/Delta{idx}| = {ratio:.3g} exceeds {DISPERSIVE_LIMIT}"
                )
        if report["rwa_ratio"] > RWA_WARN_RATIO:
            warnings.warn(
                f"chi+/omega_c = {report['rwa_ratio']:.3g}: rotating-wave approximation is marginal",
                stacklevel=3,
            )

    @classmethod
    def from_mhz(cls, *, f1: float, f2: float, fc: float, n_qubits: int, g1: float, g2: float,
                 gc: float = 0.0, kind1: str = "qubit", kind2: str = "qubit", n_max: int = 3,
                 **kwargs) -> "CouplerModel":
        """Build a model from linear frequencies and couplings in MHz."""
        return cls(
            x1=CircuitElement(kind1, from_mhz(f1), n_max),
            x2=CircuitElement(kind2, from_mhz(f2), n_max),
            omega_c=from_mhz(fc),
            n_qubits=n_qubits,
            g1=from_mhz(g1),
            g2=from_mhz(g2),
            g_c=from_mhz(gc),
            **kwargs,
        )

    def with_sector(self, j: float | None = None, m: float | None = None) -> "CouplerModel":
        return replace(self, j=j, m=m)

    def element(self, idx: int) -> CircuitElement:
        return self.x1 if idx == 1 else self.x2

    def g(self, idx: int) -> float:
        return self.g1 if idx == 1 else self.g2

    def delta(self, idx: int) -> float:
        return self.element(idx).omega - self.omega_c

    def sigma(self, idx: int) -> float:
        return self.element(idx).omega + self.omega_c

    @property
    def validity(self) -> dict:
        return dispersive_report(self)

    @property
    def jz(self) -> float:
        """Eigenvalue of the Pauli-sum ``J^z`` in the selected sector."""
        return 2 * self.m

    @property
    def case(self) -> str:
        return "".join("Q" if e.kind == "qubit" else "R" for e in (self.x1, self.x2))


def dispersive_report(model: CouplerModel) -> dict:
    """Validity ratios; only ``g/Delta`` is enforced, the rest are informational."""
    rep = {}
    collective = sqrt(2 * model.j) if model.j else 0.0
    chi_plus = []
    for idx in (1, 2):
        g, d, s = model.g(idx), model.delta(idx), model.sigma(idx)
        rep[f"g{idx}_over_delta"] = _ratio(g, d)
        rep[f"g{idx}_over_sigma"] = _ratio(g, s)
        rep[f"collective_g{idx}_over_delta"] = _ratio(collective * g, d)
        if d != 0:
            chi_plus.append(abs(g * g * (1 / d + 1 / s)))
    rep["rwa_ratio"] = max(chi_plus, default=0.0) / model.omega_c
    return rep


def _require_nonsingular(model: CouplerModel) -> None:
    for idx in (1, 2):
        if model.delta(idx) == 0 or model.sigma(idx) == 0:
            raise SingularDenominatorError(f"circuit {idx} is resonant with the coupler")


def chi(model: CouplerModel, idx: int) -> tuple[float, float]:
    """Return ``(chi_plus, chi_minus)`` with ``chi_pm = -g^2 (1/Delta +- 1/Sigma)``."""
    _require_nonsingular(model)
    g, d, s = model.g(idx), model.delta(idx), model.sigma(idx)
    return -g * g * (1 / d + 1 / s), -g * g * (1 / d - 1 / s)


def single_layer_rate(model: CouplerModel, jz: float | None = None) -> float:
    """``-sum_m (g1 g2 / 2)(1/Delta_m - 1/Sigma_m) <J^z>``."""
    _require_nonsingular(model)
    jz = model.jz if jz is None else jz
    total = sum(1 / model.delta(i) - 1 / model.sigma(i) for i in (1, 2))
    return -0.5 * model.g1 * model.g2 * total * jz


@dataclass(frozen=True)
class CouplingCoefficients:
    """Magnon-basis coefficients; arrays are indexed ``[circuit - 1, k - 1]``."""

    omega_k: np.ndarray
    hopping_k: np.ndarray
    g_mk: np.ndarray
    lambda_minus: np.ndarray
    lambda_plus: np.ndarray
    chi_plus: np.ndarray
    chi_minus: np.ndarray
    interaction: str

    @property
    def g_eff(self) -> float:
        diff = self.lambda_plus - self.lambda_minus
        # (lambda+ - lambda-)_{m,k} * g_{m',k} / 2 summed over m and k
        return float(0.5 * (np.sum(diff[0] * self.g_mk[1]) + np.sum(diff[1] * self.g_mk[0])))


def magnon_matrix(layers: int) -> np.ndarray:
    """Orthogonal sine transform ``M[d-1, k-1] = sqrt(2/(D+1)) sin(d k pi / (D+1))``."""
    d = np.arange(1, layers + 1)
    return np.sqrt(2 / (layers + 1)) * np.sin(np.outer(d, d) * pi / (layers + 1))


def magnon_transform(model: CouplerModel) -> CouplingCoefficients:
    """Normal modes of the bosonized layer chain and their dispersive coefficients."""
    _require_nonsingular(model)
    D, N = model.layers, model.n_qubits
    k = np.arange(1, D + 1)
    hopping = N * model.g_c * np.cos(k * pi / (D + 1))
    omega_k = model.omega_c + 2 * hopping
    M = magnon_matrix(D)
    # circuit 1 couples to layer 1, circuit 2 to layer D
    g_mk = np.sqrt(N) * np.array([model.g1 * M[0], model.g2 * M[D - 1]])
    lam_minus = np.empty((2, D))
    lam_plus = np.empty((2, D))
    for i in (0, 1):
        delta, sigma = model.delta(i + 1), model.sigma(i + 1)
        for kk in range(D):
            gk, g = hopping[kk], g_mk[i, kk]
            if model.interaction == "XY":
                dm, sp_ = delta - 2 * gk, sigma + 2 * gk
                if isclose(dm, 0.0, abs_tol=1e-12 * abs(delta)) or sp_ == 0:
                    raise SingularDenominatorError(f"magnon {kk + 1} resonant with circuit {i + 1}")
                lam_minus[i, kk] = -g / dm
                lam_plus[i, kk] = -g / sp_
            else:
                a = np.array([[delta - 2 * gk, 2 * gk], [-2 * gk, sigma + 2 * gk]])
                det = np.linalg.det(a)
                if isclose(det, 0.0, abs_tol=1e-12 * abs(delta * sigma)):
                    raise SingularDenominatorError(f"Ising system singular for magnon {kk + 1}")
                lam_minus[i, kk], lam_plus[i, kk] = np.linalg.solve(a, [-g, -g])
    chis = np.array([chi(model, 1), chi(model, 2)])
    return CouplingCoefficients(
        omega_k=omega_k,
        hopping_k=hopping,
        g_mk=g_mk,
        lambda_minus=lam_minus,
        lambda_plus=lam_plus,
        chi_plus=chis[:, 0],
        chi_minus=chis[:, 1],
        interaction=model.interaction,
    )


def effective_coupling_rate(model: CouplerModel) -> float:
    """Effective circuit-circuit exchange rate in rad/us."""
    if model.layers == 1:
        return single_layer_rate(model)
    if not isclose(model.m, -model.n_qubits / 2):
        warnings.warn("cascade rate assumes every layer in its ground state", stacklevel=2)
    return magnon_transform(model).g_eff


# --- operator construction -------------------------------------------------

def _layer_labels(model: CouplerModel) -> list[str]:
    return ["c"] if model.layers == 1 else [f"c{d}" for d in range(1, model.layers + 1)]


def coupler_space(model: CouplerModel, representation: str = "ladder",
                  n_max: int = DEFAULT_BOSON_LEVELS, ladder_levels: int | None = None) -> CompositeSpace:
    """Composite space ``[x1, layers..., x2]``."""
    if representation == "ladder":
        layers = [SpinLadder(lbl, model.j, ladder_levels) for lbl in _layer_labels(model)]
    elif representation == "boson":
        layers = [BosonMode(lbl, n_max) for lbl in _layer_labels(model)]
    else:
        raise ValueError(f"unknown coupler representation {representation!r}")
    return CompositeSpace([model.x1.factor("x1"), *layers, model.x2.factor("x2")])


def _collective(space: CompositeSpace, label: str, n_qubits: int) -> dict[str, Operator]:
    factor = space.factor(label)
    if isinstance(factor, SpinLadder):
        return {w: collective_operator(space, label, w) for w in ("Jplus", "Jminus", "Jz", "Jx")}
    # large-N replacement J+ -> sqrt(N) a^dag, J^z -> 2 a^dag a - N
    a = boson_operator(space, label, "Annihilate")
    ad = boson_operator(space, label, "Create")
    root = sqrt(n_qubits)
    return {
        "Jplus": root * ad,
        "Jminus": root * a,
        "Jz": 2 * boson_operator(space, label, "Number") - n_qubits * identity(space),
        "Jx": root * (a + ad),
    }


def _circuit_terms(space: CompositeSpace, model: CouplerModel):
    x = {i: lowering_operator(space, f"x{i}") for i in (1, 2)}
    bare = sum(model.element(i).omega * (x[i].dag() @ x[i]) for i in (1, 2))
    quad = {i: x[i] + x[i].dag() for i in (1, 2)}
    return x, bare, quad


def build_full_hamiltonian(model: CouplerModel, representation: str = "ladder",
                           n_max: int = DEFAULT_BOSON_LEVELS,
                           ladder_levels: int | None = None) -> Operator:
    """Circuit-ensemble Hamiltonian including counter-rotating terms.

    A single layer carries the intra-ensemble exchange
    ``g_c sum_{n<n'} (s+_n s-_n' + h.c.) = (g_c/2)(J+J- + J-J+) - g_c N / 2``;
    with several layers ``g_c`` couples neighbouring layers instead.
    """
    space = coupler_space(model, representation, n_max, ladder_levels)
    labels = _layer_labels(model)
    ops = [_collective(space, lbl, model.n_qubits) for lbl in labels]
    _, H, quad = _circuit_terms(space, model)
    for J in ops:
        H = H + 0.5 * model.omega_c * J["Jz"]
    H = H + model.g1 * (quad[1] @ ops[0]["Jx"]) + model.g2 * (quad[2] @ ops[-1]["Jx"])
    if model.g_c:
        if model.layers == 1:
            J = ops[0]
            H = H + 0.5 * model.g_c * (J["Jplus"] @ J["Jminus"] + J["Jminus"] @ J["Jplus"])
            H = H - 0.5 * model.g_c * model.n_qubits * identity(space)
        for a, b in zip(ops, ops[1:]):
            if model.interaction == "XY":
                H = H + model.g_c * (a["Jplus"] @ b["Jminus"] + a["Jminus"] @ b["Jplus"])
            else:
                H = H + model.g_c * (a["Jx"] @ b["Jx"])
    return H


def build_effective_hamiltonian(model: CouplerModel, case: str | None = None,
                                rwa: bool = False) -> Operator:
    """Second-order dispersive Hamiltonian of a single-layer coupler.

    Without ``rwa`` the operator acts on ``[x1, c, x2]`` and keeps the
    collective ``J^z``-conditioned cross coupling, the ``(x + x^dag)^2 J^z``
    shifts and the ``[x, x^dag](J^x)^2`` term. With ``rwa`` the coupler is
    frozen in ``|j, m>``: ``J^z -> 2m``, ``(J^x)^2 -> J+J- + J-J+ =
    2(j(j+1) - m^2)``, two-photon terms are dropped and the result acts on
    ``[x1, x2]`` only, with exchange ``g_eff (x1^dag x2 + x1 x2^dag)``.
    """
    if model.layers != 1:
        raise ValueError("use build_cascade_effective_hamiltonian for several layers")
    if case is not None and case != model.case:
        raise ValueError(f"case {case!r} does not match circuit kinds {model.case!r}")
    chis = {i: chi(model, i) for i in (1, 2)}
    cross = -0.5 * model.g1 * model.g2 * sum(1 / model.delta(i) - 1 / model.sigma(i) for i in (1, 2))

    if rwa:
        space = CompositeSpace([model.x1.factor("x1"), model.x2.factor("x2")])
        x, H, _ = _circuit_terms(space, model)
        one = identity(space)
        jx2 = 2 * (model.j * (model.j + 1) - model.m ** 2)
        shift = model.omega_c
        for i in (1, 2):
            chi_p, chi_m = chis[i]
            n = x[i].dag() @ x[i]
            quad_rwa = one if model.element(i).kind == "qubit" else 2 * n + one
            H = H + 0.5 * chi_m * model.jz * quad_rwa
            H = H + 0.5 * chi_p * jx2 * circuit_commutator(space, f"x{i}")
        H = H + (0.5 * shift * model.jz + 0.5 * model.g_c * jx2) * one
        H = H + cross * model.jz * (x[1].dag() @ x[2] + x[1] @ x[2].dag())
        return H

    space = coupler_space(model, "ladder")
    J = _collective(space, "c", model.n_qubits)
    x, H, quad = _circuit_terms(space, model)
    jx2 = J["Jx"] @ J["Jx"]
    H = H + 0.5 * model.omega_c * J["Jz"]
    for i in (1, 2):
        chi_p, chi_m = chis[i]
        H = H + 0.5 * chi_m * (quad[i] @ quad[i] @ J["Jz"])
        H = H + 0.5 * chi_p * (circuit_commutator(space, f"x{i}") @ jx2)
    H = H + cross * (J["Jz"] @ quad[1] @ quad[2])
    H = H + 0.5 * model.g_c * (J["Jplus"] @ J["Jminus"] + J["Jminus"] @ J["Jplus"])
    return H


def build_cascade_effective_hamiltonian(model: CouplerModel,
                                        n_max: int = DEFAULT_BOSON_LEVELS) -> Operator:
    """Dispersive Hamiltonian of a bosonized multi-layer coupler in the magnon basis.

    Acts on ``[x1, k1..kD, x2]`` where ``kK`` is the K-th magnon mode. The
    ``g_k (a_k^dag^2 + a_k^2)`` term is present only for Ising coupling.
    """
    coeff = magnon_transform(model)
    D = model.layers
    labels = [f"k{k}" for k in range(1, D + 1)]
    space = CompositeSpace([model.x1.factor("x1"), *[BosonMode(l, n_max) for l in labels],
                            model.x2.factor("x2")])
    x, H, quad = _circuit_terms(space, model)
    a = [boson_operator(space, l, "Annihilate") for l in labels]
    ad = [op.dag() for op in a]
    aq = [p + q for p, q in zip(a, ad)]
    for kk in range(D):
        H = H + coeff.omega_k[kk] * (ad[kk] @ a[kk])
        if model.interaction == "Ising":
            H = H + coeff.hopping_k[kk] * (ad[kk] @ ad[kk] + a[kk] @ a[kk])
    diff = coeff.lambda_plus - coeff.lambda_minus
    summ = coeff.lambda_plus + coeff.lambda_minus
    H = H + coeff.g_eff * (quad[1] @ quad[2])
    for i in (0, 1):
        comm = circuit_commutator(space, f"x{i + 1}")
        for kk in range(D):
            H = H + 0.5 * diff[i, kk] * coeff.g_mk[i, kk] * (quad[i + 1] @ quad[i + 1])
            for kp in range(D):
                H = H + 0.5 * summ[i, kk] * coeff.g_mk[i, kp] * (aq[kk] @ aq[kp] @ comm)
    return H

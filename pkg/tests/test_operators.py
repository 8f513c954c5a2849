import numpy as np
import pytest

from conftest import SM, SP, SX, SZ, pauli_sum
from dcoupler.operators import (
    BosonMode,
    CompositeSpace,
    FactorKindError,
    SpaceMismatchError,
    SpinLadder,
    TwoLevel,
    basis_state,
    boson_operator,
    collective_operator,
    commutator,
    identity,
    qubit_operator,
    spin_multiplicities,
)

LADDERS = [0, 0.5, 1, 1.5, 2, 3.5, 40]


def ladder(j):
    space = CompositeSpace([SpinLadder("c", j)])
    ops = {w: collective_operator(space, "c", w) for w in ("Jplus", "Jminus", "Jz", "Jx")}
    return space, ops


def test_factor_dimensions():
    space = CompositeSpace([TwoLevel("q"), BosonMode("a", 4), SpinLadder("c", 40)])
    assert space.dims == (2, 5, 81)
    assert space.dim == 2 * 5 * 81
    assert SpinLadder("h", 1.5).dim == 4


def test_labels_must_be_unique():
    with pytest.raises(ValueError):
        CompositeSpace([TwoLevel("q"), TwoLevel("q")])


def test_index_roundtrip_row_major():
    space = CompositeSpace([TwoLevel("a"), BosonMode("b", 2), SpinLadder("c", 1)])
    seen = set()
    for i in range(space.dim):
        multi = space.multi_index(i)
        assert space.index(multi) == i
        seen.add(multi)
    assert len(seen) == space.dim
    # last factor varies fastest
    assert space.multi_index(1) == (0, 0, 1)
    assert space.multi_index(3) == (0, 1, 0)


def test_half_integer_j_required():
    with pytest.raises(ValueError):
        SpinLadder("c", 0.3)


def test_jminus_annihilates_lowest_weight():
    for j in LADDERS:
        space, ops = ladder(j)
        psi = basis_state(space, {"c": -j})
        assert np.linalg.norm(ops["Jminus"].matrix @ psi) == 0.0


def test_jz_all_ground_80():
    space, ops = ladder(40)
    psi = basis_state(space, {"c": -40})
    assert ops["Jz"].expect(psi) == pytest.approx(-80)


def test_jminus_spin_half():
    space, ops = ladder(0.5)
    out = ops["Jminus"].matrix @ basis_state(space, {"c": 0.5})
    assert np.allclose(out, basis_state(space, {"c": -0.5}))


@pytest.mark.parametrize("j", LADDERS)
def test_su2_commutators(j):
    _, o = ladder(j)
    assert (commutator(o["Jz"], o["Jplus"]) - 2 * o["Jplus"]).norm() < 1e-12
    assert (commutator(o["Jz"], o["Jminus"]) + 2 * o["Jminus"]).norm() < 1e-12
    assert (commutator(o["Jplus"], o["Jminus"]) - o["Jz"]).norm() < 1e-12 * max(1, j)


@pytest.mark.parametrize("j", LADDERS)
def test_casimir(j):
    space, o = ladder(j)
    # textbook J^2 with J_text = J / 2 in the sum convention
    c = 0.5 * (o["Jplus"] @ o["Jminus"] + o["Jminus"] @ o["Jplus"]) + 0.25 * (o["Jz"] @ o["Jz"])
    assert (c - j * (j + 1) * identity(space)).norm() < 1e-10


@pytest.mark.parametrize("j", LADDERS)
def test_jx_is_sum_of_raising_and_lowering(j):
    _, o = ladder(j)
    assert (o["Jx"] - o["Jplus"] - o["Jminus"]).norm() == 0.0
    assert o["Jx"].is_hermitian()


def _symmetric_basis(n):
    """Orthonormal |N/2, m> states in the 2^N space built by lowering |e...e>."""
    jm = pauli_sum(SM, n)
    j = n / 2
    vec = np.zeros(2 ** n, dtype=complex)
    vec[-1] = 1.0  # all excited
    states = [vec]
    m = j
    while m > -j:
        vec = jm @ vec
        vec = vec / np.linalg.norm(vec)
        states.append(vec)
        m -= 1
    return np.array(states[::-1]).T  # columns ordered m = -j ... j


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_collective_matches_pauli_sum(n):
    P = _symmetric_basis(n)
    _, o = ladder(n / 2)
    for name, op in (("Jplus", SP), ("Jminus", SM), ("Jz", SZ), ("Jx", SX)):
        projected = P.conj().T @ pauli_sum(op, n) @ P
        assert np.allclose(projected, o[name].toarray(), atol=1e-12), name
    # the symmetric subspace is invariant under the Pauli sums
    for op in (SP, SM, SZ):
        full = pauli_sum(op, n) @ P
        assert np.allclose(P @ (P.conj().T @ full), full, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exchange_operator_value_against_pauli(n):
    P = _symmetric_basis(n)
    jp, jm = pauli_sum(SP, n), pauli_sum(SM, n)
    brute = P.conj().T @ (0.5 * (jp @ jm + jm @ jp)) @ P
    j = n / 2
    m = -j + np.arange(n + 1)
    assert np.allclose(brute, np.diag(j * (j + 1) - m ** 2), atol=1e-12)


def test_spin_multiplicities_count_dimension():
    for n in range(1, 9):
        mult = spin_multiplicities(n)
        assert sum(c * (2 * j + 1) for j, c in mult.items()) == 2 ** n


def test_boson_operators():
    space = CompositeSpace([BosonMode("a", 4)])
    a = boson_operator(space, "a", "Annihilate")
    ad = boson_operator(space, "a", "Create")
    num = boson_operator(space, "a", "Number")
    assert np.linalg.norm(a.matrix @ basis_state(space, {"a": 0})) == 0.0
    assert num.expect(basis_state(space, {"a": 3})) == pytest.approx(3)
    # hard truncation: Create kills the top state
    assert np.linalg.norm(ad.matrix @ basis_state(space, {"a": 4})) == 0.0
    comm = commutator(a, ad).toarray()
    assert np.allclose(comm[:4, :4], np.eye(4))
    assert comm[4, 4] == pytest.approx(-4)
    assert (ad @ a - num).norm() < 1e-12


def test_qubit_operators():
    space = CompositeSpace([TwoLevel("q")])
    z = qubit_operator(space, "q", "z")
    assert z.expect(basis_state(space, {"q": 1})) == pytest.approx(1)
    assert z.expect(basis_state(space, {"q": 0})) == pytest.approx(-1)


def test_wrong_factor_kind_and_label():
    space = CompositeSpace([TwoLevel("q"), BosonMode("a", 2)])
    with pytest.raises(FactorKindError):
        collective_operator(space, "q", "Jz")
    with pytest.raises(FactorKindError):
        boson_operator(space, "q", "Number")
    with pytest.raises(KeyError):
        collective_operator(space, "missing", "Jz")


def test_space_mismatch():
    s1 = CompositeSpace([TwoLevel("q")])
    s2 = CompositeSpace([TwoLevel("p")])
    with pytest.raises(SpaceMismatchError):
        identity(s1) + identity(s2)
    with pytest.raises(SpaceMismatchError):
        identity(s1) @ identity(s2)


def test_self_commutator_vanishes_and_embedding():
    space = CompositeSpace([TwoLevel("q"), SpinLadder("c", 2), BosonMode("a", 3)])
    H = collective_operator(space, "c", "Jx") + 2.0 * boson_operator(space, "a", "Number")
    assert commutator(H, H).norm() == 0.0
    # operators on distinct factors commute
    assert commutator(qubit_operator(space, "q", "x"), collective_operator(space, "c", "Jx")).norm() == 0.0


def test_entries_sorted_and_deterministic():
    space = CompositeSpace([SpinLadder("c", 3), TwoLevel("q")])
    op = collective_operator(space, "c", "Jx") + qubit_operator(space, "q", "x")
    first = op.entries()
    again = (collective_operator(space, "c", "Jx") + qubit_operator(space, "q", "x")).entries()
    assert first == again
    assert first == sorted(first, key=lambda e: (e[0], e[1]))

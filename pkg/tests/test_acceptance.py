"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the per-criterion lines are
printed in the terminal summary. ``python tests/test_acceptance.py`` prints
them without pytest.
"""

from __future__ import annotations

import sys
import tempfile
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import SM, SZ, kron, pauli_full_hamiltonian, pauli_sum  # noqa: E402
from dcoupler import CouplerModel, build_full_hamiltonian, effective_coupling_rate, from_mhz, to_mhz  # noqa: E402
from dcoupler.control import PairRegister, PairState, verify_subradiance  # noqa: E402
from dcoupler.dynamics import EvolutionSpec, evolve_lindblad  # noqa: E402
from dcoupler.operators import (  # noqa: E402
    CompositeSpace,
    SpinLadder,
    basis_state,
    collective_operator,
    spin_multiplicities,
)
from dcoupler.scenarios import PRESETS, RUNTIME_BUDGET_S, get_preset, run_scenario, write_outputs  # noqa: E402
from dcoupler.transducer import transducer_optimal_N  # noqa: E402

RESULTS: dict[int, str] = {}
_OUT = Path(tempfile.mkdtemp(prefix="dcoupler-acceptance-"))


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def preset_run(name: str, tag: str = "first"):
    """Run a preset once per tag; returns (summary, csv bytes, runtime)."""
    start = time.perf_counter()
    result = run_scenario(get_preset(name))
    runtime = time.perf_counter() - start
    paths = write_outputs(result, _OUT / tag)
    return result.summary, paths["csv"].read_bytes(), runtime


def fig3(n, m=None, **kw):
    args = dict(f1=1000, f2=1000, fc=4000, n_qubits=n, g1=10, g2=10)
    args.update(kw)
    return CouplerModel.from_mhz(**args, m=m)


def _sig_round(x: float, digits: int) -> float:
    return float(f"{x:.{digits}g}")


def test_criterion_1_closed_form_rates():
    start = time.perf_counter()
    cases = [  # (label, model, published value, significant digits)
        ("N=80 all ground", fig3(80, -40), -4.267, 4),
        ("m=0", fig3(80, 0), 0.0, 4),
        ("m=+40", fig3(80, 40), 4.267, 4),
        ("N=160", fig3(160), -8.533, 4),
        ("N=240", fig3(240), -12.80, 4),
        ("N=320", fig3(320), -17.07, 4),
        ("N=480", fig3(480), -25.60, 4),
        ("D=2 N=240", fig3(240, layers=2, gc=10), 20.77, 4),
        ("D=2 N=160", fig3(160, layers=2, gc=10), 5.12, 3),
    ]
    bad = []
    for label, model, published, digits in cases:
        got = to_mhz(effective_coupling_rate(model))
        if _sig_round(got, digits) != published and not (published == 0 and abs(got) < 1e-12):
            bad.append(f"{label}: {got:.6g}")
    elapsed = time.perf_counter() - start
    report(1, not bad and elapsed < 1.0,
           f"{len(cases) - len(bad)}/{len(cases)} rates match printed digits in {elapsed:.3f}s {bad}")


def test_criterion_2_dynamics_rates():
    lines, ok = [], True
    for name in ("fig3a", "fig3b", "fig3c", "fig3d", "fig3e", "fig3f", "fig3g"):
        s, _, runtime = preset_run(name)
        closed, fitted = s["g_eff_closed_form_mhz"], s["g_eff_fitted_mhz"]
        if closed == 0:
            good = not s["oscillating"] and fitted == 0
            lines.append(f"{name} off (flagged)")
        else:
            err = abs(abs(fitted) - abs(closed)) / abs(closed)
            good = err < 0.05
            lines.append(f"{name} {err:.2%}")
        ok &= good
    a, g = preset_run("fig3a"), preset_run("fig3g")
    ok &= a[0]["dimension"] == 324 and a[2] < 60
    ok &= g[0]["dimension"] == 1284 and g[2] < 300
    report(2, ok, f"|fit - closed|/closed: {', '.join(lines)}; fig3a {a[2]:.1f}s, fig3g {g[2]:.1f}s")


def test_criterion_3_cascade_dynamics():
    s, _, runtime = preset_run("fig3h")
    err = abs(s["g_eff_fitted_mhz"] - 20.77) / 20.77
    ok = err < 0.10 and s["dimension"] <= 100 and runtime < 600
    report(3, ok, f"fitted {s['g_eff_fitted_mhz']:.3f} MHz ({err:.2%} from +20.77), "
                  f"dim {s['dimension']}, {runtime:.1f}s")


def test_criterion_4_off_switch():
    s, _, _ = preset_run("fig3c")
    report(4, s["max_P_Q2"] < 0.05,
           f"fig3c |j=40, m=0>: max P_Q2 = {s['max_P_Q2']:.4f} over {get_preset('fig3c')['horizon_us']} us "
           f"(oscillating={s['oscillating']})")


def test_criterion_5_sign_reversal():
    a, d = preset_run("fig3a")[0], preset_run("fig3d")[0]
    ga, gd = a["g_eff_fitted_mhz"], d["g_eff_fitted_mhz"]
    ok = a["sign_resolved"] and d["sign_resolved"] and np.sign(ga) == -np.sign(gd) != 0
    mismatch = abs(abs(ga) - abs(gd)) / abs(ga)
    report(5, bool(ok and mismatch < 0.02), f"m=-40 {ga:+.4f} MHz, m=+40 {gd:+.4f} MHz, |diff| {mismatch:.2e}")


def _dissipator(L, rho):
    Ld = L.conj().T
    return 2 * L @ rho @ Ld - Ld @ L @ rho - rho @ Ld @ L


def test_criterion_6_subradiance():
    rng = np.random.default_rng(20240611)
    singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    ground = np.array([1, 0, 0, 0], dtype=complex)
    worst = 0.0
    for _ in range(10):
        pairs = int(rng.integers(1, 6))
        reg = PairRegister(rng.choice(["g", "s"], size=pairs))
        worst = max(worst, verify_subradiance(reg, 1.0, 1.0).max_norm)
        # independent oracle in the full 2^N space
        n = reg.n_qubits
        psi = kron(*[singlet if p is PairState.SINGLET else ground for p in reg.pairs])
        rho = np.outer(psi, psi.conj())
        for L in (pauli_sum(SM, n), pauli_sum(SZ, n)):
            worst = max(worst, 0.5 * np.linalg.norm(_dissipator(L, rho)))
    drift = 0.0
    gamma = from_mhz(1.0)
    for j in (0.5, 1, 2.5, 5):
        space = CompositeSpace([SpinLadder("c", j)])
        jm = collective_operator(space, "c", "Jminus")
        jz = collective_operator(space, "c", "Jz")
        psi = basis_state(space, {"c": -j})
        rho0 = np.outer(psi, psi)
        rec = evolve_lindblad(EvolutionSpec(from_mhz(2000) * 0.5 * jz, rho0, 10 / gamma, 201,
                                            collapse=[(jm, gamma / 2), (jz, gamma / 2)], store_states=True))
        drift = max(drift, float(np.max(np.abs(rec.states - rho0))))
    report(6, worst < 1e-12 and drift < 1e-8,
           f"max dissipator norm {worst:.1e} over 10 registers; |j,-j> drift {drift:.1e} over 10/gamma")


def test_criterion_7_transducer():
    p = transducer_optimal_N(from_mhz(2744.0), from_mhz(194.3e6), from_mhz(2870.0), from_mhz(1e-3), from_mhz(1e-3))
    g_hz = abs(to_mhz(p.g_eff)) * 1e6
    s, _, _ = preset_run("fig2")
    ok = (abs(p.n_opt / 2.394e16 - 1) < 0.02 and 0.9 * 9.7e13 <= g_hz <= 1.1 * 9.7e13
          and s["max_residual"] < 1e-9 and abs(s["marker_N_opt"] / 2.394e16 - 1) < 0.02)
    report(7, ok, f"N_opt {p.n_opt:.4e}, |g_eff| {g_hz:.4e} Hz, sweep max residual {s['max_residual']:.1e}")


def test_criterion_8_oracle_equivalence():
    start = time.perf_counter()
    spec_dev, split_ok = 0.0, True
    notes = []
    for n in (2, 3):
        model = fig3(n)
        H = pauli_full_hamiltonian(model)
        w, V = np.linalg.eigh(H)
        pieces = []
        for j, mult in spin_multiplicities(n).items():
            pieces += list(np.linalg.eigvalsh(build_full_hamiltonian(model.with_sector(j=j)).toarray())) * mult
        spec_dev = max(spec_dev, float(np.max(np.abs(np.sort(pieces) - w))))
        dim_spins = 2 ** n
        s1, s2 = dim_spins * 2, 1  # |1, g..g, 0> and |0, g..g, 1>
        weight = np.abs(V[s1]) ** 2 + np.abs(V[s2]) ** 2
        idx = np.argsort(weight)[-2:]
        split = abs(w[idx[1]] - w[idx[0]])
        target = 2 * abs(effective_coupling_rate(model))
        bound = 10 * model.g1 ** 3 / model.delta(1) ** 2
        split_ok &= abs(split - target) < bound
        notes.append(f"N={n} split err {abs(split - target):.1e} (bound {bound:.1e})")
    elapsed = time.perf_counter() - start
    report(8, spec_dev < 1e-10 and split_ok and elapsed < 10,
           f"max eigenvalue deviation {spec_dev:.1e}; {'; '.join(notes)}; {elapsed:.2f}s")


def test_criterion_9_ripple_scaling():
    base, scaled = preset_run("fig3g")[0], preset_run("fig3g-scaled")[0]
    ratio = base["coupler_ripple"] / scaled["coupler_ripple"]
    same_rate = abs(base["g_eff_closed_form_mhz"] / scaled["g_eff_closed_form_mhz"] - 1) < 1e-12
    report(9, ratio >= 2 and same_rate,
           f"ripple {base['coupler_ripple']:.4g} (N=320) -> {scaled['coupler_ripple']:.4g} (N=640) "
           f"at fixed g_eff: reduction x{ratio:.2f}")


def test_criterion_10_determinism():
    differing = [name for name in sorted(PRESETS) if preset_run(name)[1] != preset_run(name, "second")[1]]
    report(10, not differing, f"{len(PRESETS)} presets re-run, byte-identical CSV" if not differing
           else f"differing: {differing}")


def test_runtime_budgets():
    over = []
    for name in sorted(PRESETS):
        runtime = preset_run(name)[2]
        if runtime > RUNTIME_BUDGET_S[name]:
            over.append(f"{name} {runtime:.1f}s > {RUNTIME_BUDGET_S[name]}s")
    assert not over, over


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)

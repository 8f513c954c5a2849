"""Scenario configuration, named presets and runners that write CSV + summary files."""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .control import Direction, PairRegister, PulseCommand, apply_pulses, register_to_geff, verify_subradiance
from .dynamics import (
    EvolutionSpec,
    circuit_observables,
    compare_full_vs_effective,
    evolve_lindblad,
    evolve_unitary,
    excited_state,
    extract_swap_rate,
)
from .model import (
    CouplerModel,
    build_cascade_effective_hamiltonian,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_coupling_rate,
    from_mhz,
    to_mhz,
)
from .operators import CompositeSpace, SpinLadder, basis_state, collective_operator, identity
from .transducer import SweepSpec, run_sweep

KINDS = ("full_dynamics", "effective_dynamics", "compare", "lindblad", "sweep", "register_demo")
DYNAMIC_COLUMNS = ("t_us", "P_Q1", "P_Q2", "Jz_deviation", "coupler_excitation")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCENARIO_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dcoupler scenario",
    **_obj({
        "name": {"type": "string"},
        "description": {"type": "string"},
        "kind": {"enum": list(KINDS)},
        "circuits": _obj({
            "x1": {"enum": ["qubit", "resonator"]},
            "x2": {"enum": ["qubit", "resonator"]},
            "n_max": {"type": "integer", "minimum": 1},
        }),
        "frequencies_mhz": _obj({"x1": _pos, "x2": _pos, "coupler": _pos},
                                ["x1", "x2", "coupler"]),
        "couplings_mhz": _obj({"g1": _num, "g2": _num, "gc": _num}, ["g1", "g2"]),
        "ensemble": _obj({"n": {"type": "integer", "minimum": 1}, "j": _nonneg, "m": _num}, ["n"]),
        "layers": {"type": "integer", "minimum": 1},
        "interaction": {"enum": ["XY", "Ising"]},
        "representation": {"enum": ["ladder", "boson"]},
        "boson_levels": {"type": "integer", "minimum": 1},
        "ladder_levels": {"type": ["integer", "null"], "minimum": 1},
        "initial": _obj({"excite": {"enum": ["x1", "x2"]}}),
        "horizon_us": _pos,
        "samples": {"type": "integer", "minimum": 2},
        "tolerance": _pos,
        "lindblad": _obj({"gamma_mhz": _nonneg, "gamma_phi_mhz": _nonneg,
                          "coupler_only": {"type": "boolean"},
                          "dim_cap": {"type": "integer", "minimum": 1}},
                         ["gamma_mhz", "gamma_phi_mhz"]),
        "sweep": _obj({
            "f1_mhz": _pos, "f2_mhz": _pos, "fc_lo_mhz": _pos, "fc_hi_mhz": _pos,
            "points": {"type": "integer", "minimum": 2}, "g1_mhz": _num, "g2_mhz": _num,
            "marker_mhz": _pos, "log_spacing": {"type": "boolean"},
            "transfer_k": {"type": "integer", "minimum": 0},
        }, ["f1_mhz", "f2_mhz", "fc_lo_mhz", "fc_hi_mhz", "points", "g1_mhz", "g2_mhz"]),
        "register": _obj({
            "n": {"type": "integer", "minimum": 2, "multipleOf": 2},
            "steps": {"type": "array", "items": _obj({
                "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "direction": {"enum": ["raise", "lower"]},
            }, ["targets", "direction"])},
        }, ["n", "steps"]),
        "runtime_budget_s": _pos,
    }, ["kind"]),
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["full_dynamics", "effective_dynamics", "compare"]}}},
         "then": {"required": ["frequencies_mhz", "couplings_mhz", "ensemble", "horizon_us", "samples"]}},
        {"if": {"properties": {"kind": {"const": "lindblad"}}},
         "then": {"required": ["frequencies_mhz", "couplings_mhz", "ensemble", "horizon_us",
                               "samples", "lindblad"]}},
        {"if": {"properties": {"kind": {"const": "sweep"}}}, "then": {"required": ["sweep"]}},
        {"if": {"properties": {"kind": {"const": "register_demo"}}},
         "then": {"required": ["register", "frequencies_mhz", "couplings_mhz"]}},
    ],
}


class ConfigError(ValueError):
    """Scenario configuration violates the schema."""


def validate_config(config: dict) -> dict:
    """Schema check plus the cross-field rules a JSON schema cannot express."""
    try:
        jsonschema.validate(config, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    ens = config.get("ensemble")
    if ens:
        n = ens["n"]
        j = ens.get("j", n / 2)
        m = ens.get("m", -j)
        if j > n / 2 or (n / 2 - j) % 1 or abs(m) > j or (j - m) % 1:
            raise ConfigError(f"ensemble: (j={j}, m={m}) is not a sector of N={n}")
    return config


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return validate_config(config)


# --- presets ----------------------------------------------------------------

def _fig3(name: str, desc: str, n: int, m: float, horizon: float, **extra) -> dict:
    cfg = {
        "name": name,
        "description": desc,
        "kind": "compare",
        "circuits": {"x1": "qubit", "x2": "qubit"},
        "frequencies_mhz": {"x1": 1000.0, "x2": 1000.0, "coupler": 4000.0},
        "couplings_mhz": {"g1": 10.0, "g2": 10.0, "gc": 0.0},
        "ensemble": {"n": n, "j": n / 2, "m": m},
        "layers": 1,
        "interaction": "XY",
        "representation": "ladder",
        "initial": {"excite": "x1"},
        "horizon_us": horizon,
        "samples": 2001,
    }
    cfg.update(extra)
    return cfg


def _scaled_coupler_mhz(f_q: float, f_c: float, factor: float) -> float:
    """Coupler frequency keeping ``N * (1/Delta - 1/Sigma)`` fixed when N grows by ``factor``."""
    # 2 f_c / (f_c^2 - f_q^2) must shrink by ``factor``
    target = 2 * f_c / (f_c ** 2 - f_q ** 2) / factor
    return (1 + np.sqrt(1 + (target * f_q) ** 2)) / target


PRESETS: dict[str, dict] = {
    "fig3a": _fig3("fig3a", "80-qubit coupler, all ground (m=-40): maximal negative exchange", 80, -40, 0.25),
    "fig3b": _fig3("fig3b", "80-qubit coupler at m=-20: half the maximal exchange", 80, -20, 0.5),
    "fig3c": _fig3("fig3c", "80-qubit coupler at j=40, m=0: exchange switched off", 80, 0, 2.0),
    "fig3c-register": {
        **_fig3("fig3c-register", "80-qubit coupler in the all-singlet register (j=0, m=0): digital off state",
                80, 0, 2.0),
        "ensemble": {"n": 80, "j": 0, "m": 0},
    },
    "fig3d": _fig3("fig3d", "80-qubit coupler, all excited (m=+40): maximal positive exchange", 80, 40, 0.25),
    "fig3e": _fig3("fig3e", "160-qubit coupler, all ground", 160, -80, 0.125),
    "fig3f": _fig3("fig3f", "240-qubit coupler, all ground", 240, -120, 0.08),
    "fig3g": _fig3("fig3g", "320-qubit coupler, all ground", 320, -160, 0.06),
    "fig3g-scaled": _fig3(
        "fig3g-scaled", "640-qubit coupler with detuning raised to keep the fig3g exchange rate",
        640, -320, 0.06,
        frequencies_mhz={"x1": 1000.0, "x2": 1000.0, "coupler": float(_scaled_coupler_mhz(1000.0, 4000.0, 2.0))},
    ),
    "fig3h": _fig3(
        "fig3h", "two-layer cascade, 240 qubits per layer, bosonized layers (n_max=4)",
        240, -120, 0.05,
        couplings_mhz={"g1": 10.0, "g2": 10.0, "gc": 10.0},
        layers=2, representation="boson", boson_levels=4,
    ),
    "fig2": {
        "name": "fig2",
        "description": "microwave-optical transducer: optimal ensemble size vs coupler frequency",
        "kind": "sweep",
        "sweep": {"f1_mhz": 2744.0, "f2_mhz": 194.3e6, "fc_lo_mhz": 1000.0, "fc_hi_mhz": 4.0e8,
                  "points": 200, "g1_mhz": 1e-3, "g2_mhz": 1e-3, "marker_mhz": 2870.0,
                  "log_spacing": True, "transfer_k": 0},
    },
    "subradiance": {
        "name": "subradiance",
        "description": "open-system evolution of the subradiant state |j=5, m=-5> under collective decay and dephasing",
        "kind": "lindblad",
        "frequencies_mhz": {"x1": 1000.0, "x2": 1000.0, "coupler": 4000.0},
        "couplings_mhz": {"g1": 0.0, "g2": 0.0, "gc": 0.0},
        "ensemble": {"n": 10, "j": 5, "m": -5},
        "lindblad": {"gamma_mhz": 1.0, "gamma_phi_mhz": 1.0, "coupler_only": True},
        "horizon_us": 1.6,
        "samples": 201,
    },
    "register-demo": {
        "name": "register-demo",
        "description": "digital coupler: pi-pulse steps on an 80-qubit pair register and the resulting exchange rate",
        "kind": "register_demo",
        "frequencies_mhz": {"x1": 1000.0, "x2": 1000.0, "coupler": 4000.0},
        "couplings_mhz": {"g1": 10.0, "g2": 10.0, "gc": 0.0},
        "register": {"n": 80, "steps": [
            {"targets": [0], "direction": "raise"},
            {"targets": list(range(1, 20)), "direction": "raise"},
            {"targets": list(range(20, 40)), "direction": "raise"},
            {"targets": list(range(0, 40)), "direction": "lower"},
        ]},
    },
}

RUNTIME_BUDGET_S = {"fig3a": 60, "fig3b": 60, "fig3c": 60, "fig3c-register": 60, "fig3d": 60,
                    "fig3e": 120, "fig3f": 180, "fig3g": 300, "fig3g-scaled": 600, "fig3h": 600,
                    "fig2": 10, "subradiance": 120, "register-demo": 10}


def list_presets() -> list[tuple[str, str]]:
    return [(name, PRESETS[name]["description"]) for name in sorted(PRESETS)]


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see list-presets")
    return copy.deepcopy(PRESETS[name])


# --- model assembly ---------------------------------------------------------

def model_from_config(config: dict) -> CouplerModel:
    freq, coup = config["frequencies_mhz"], config["couplings_mhz"]
    circuits = config.get("circuits", {})
    ens = config.get("ensemble", {"n": 2})
    return CouplerModel.from_mhz(
        f1=freq["x1"], f2=freq["x2"], fc=freq["coupler"],
        n_qubits=ens["n"], g1=coup["g1"], g2=coup["g2"], gc=coup.get("gc", 0.0),
        kind1=circuits.get("x1", "qubit"), kind2=circuits.get("x2", "qubit"),
        n_max=circuits.get("n_max", 3),
        layers=config.get("layers", 1), interaction=config.get("interaction", "XY"),
        j=ens.get("j"), m=ens.get("m"),
    )


@dataclass
class ScenarioResult:
    name: str
    columns: list[str]
    rows: np.ndarray
    summary: dict[str, Any] = field(default_factory=dict)
    records: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _dynamics_table(record, extra: dict | None = None) -> tuple[list[str], np.ndarray]:
    cols = ["t_us"]
    data = [record.times]
    for name in DYNAMIC_COLUMNS[1:]:
        if name in record.observables:
            cols.append(name)
            data.append(np.real(record[name]))
    for name in sorted(record.observables):
        if name.startswith("n_"):
            cols.append(name)
            data.append(np.real(record[name]))
    for name, values in (extra or {}).items():
        cols.append(name)
        data.append(np.real(values))
    return cols, np.column_stack(data)


def _fit_summary(summary: dict, record, closed: float, prefix: str = "") -> None:
    fit = extract_swap_rate(record)
    summary[f"{prefix}g_eff_fitted_mhz"] = to_mhz(fit.rate)
    summary[f"{prefix}fit_residual"] = fit.residual
    summary[f"{prefix}oscillating"] = fit.oscillating
    summary[f"{prefix}sign_resolved"] = fit.sign_resolved
    if fit.oscillating and closed:
        summary[f"{prefix}fit_relative_error"] = abs(fit.rate - closed) / abs(closed)
    summary[f"{prefix}max_P_Q2"] = float(np.max(record["P_Q2"]))


def _run_dynamics(config: dict, kind: str) -> ScenarioResult:
    model = model_from_config(config)
    rep = config.get("representation", "ladder")
    n_max = config.get("boson_levels", 4)
    levels = config.get("ladder_levels")
    horizon, samples = config["horizon_us"], config["samples"]
    excite = config.get("initial", {}).get("excite", "x1")
    closed = effective_coupling_rate(model)
    summary: dict[str, Any] = {
        "kind": kind, "layers": model.layers, "n_qubits": model.n_qubits, "j": model.j, "m": model.m,
        "g_eff_closed_form_mhz": to_mhz(closed),
    }
    summary.update({k: v for k, v in model.validity.items()})

    if kind == "compare":
        rep_ = compare_full_vs_effective(model, horizon, samples, excite, rep, n_max, levels)
        extra = {"P_Q1_eff": rep_.effective["P_Q1"], "P_Q2_eff": rep_.effective["P_Q2"]}
        cols, rows = _dynamics_table(rep_.full, extra)
        summary["dimension"] = rep_.full_dimension
        summary["effective_dimension"] = rep_.effective_dimension
        summary["max_deviation"] = rep_.max_deviation
        summary["coupler_ripple"] = rep_.ripple_amplitude
        summary["error_estimate"] = rep_.full.error_estimate
        _fit_summary(summary, rep_.full, closed)
        _fit_summary(summary, rep_.effective, closed, "effective_")
        return ScenarioResult(config.get("name", kind), cols, rows, summary,
                              {"full": rep_.full, "effective": rep_.effective})

    if kind == "full_dynamics":
        H = build_full_hamiltonian(model, rep, n_max, levels)
        psi0 = excited_state(H.space, model, excite)
    elif model.layers == 1:
        H = build_effective_hamiltonian(model, rwa=True)
        psi0 = basis_state(H.space, {excite: 1})
    else:
        H = build_cascade_effective_hamiltonian(model, n_max)
        psi0 = basis_state(H.space, {excite: 1})
    spec = EvolutionSpec(H, psi0, horizon, samples, tolerance=config.get("tolerance", 1e-9),
                         observables=circuit_observables(H.space, model))
    record = evolve_unitary(spec)
    cols, rows = _dynamics_table(record)
    summary["dimension"] = H.dim
    summary["error_estimate"] = record.error_estimate
    if "coupler_excitation" in record.observables:
        summary["coupler_ripple"] = float(np.max(np.abs(record["coupler_excitation"])))
    _fit_summary(summary, record, closed)
    return ScenarioResult(config.get("name", kind), cols, rows, summary, {"trajectory": record})


def _run_lindblad(config: dict) -> ScenarioResult:
    model = model_from_config(config)
    lind = config["lindblad"]
    gamma, gamma_phi = from_mhz(lind["gamma_mhz"]), from_mhz(lind["gamma_phi_mhz"])
    if lind.get("coupler_only", False):
        space = CompositeSpace([SpinLadder("c", model.j)])
        jp = collective_operator(space, "c", "Jplus")
        jm = collective_operator(space, "c", "Jminus")
        H = 0.5 * model.omega_c * collective_operator(space, "c", "Jz")
        if model.g_c:
            H = H + 0.5 * model.g_c * (jp @ jm + jm @ jp)
        psi0 = basis_state(space, {"c": model.m})
        obs = {"Jz_deviation": collective_operator(space, "c", "Jz") - model.jz * identity(space)}
        obs["coupler_excitation"] = 0.5 * obs["Jz_deviation"]
    else:
        H = build_full_hamiltonian(model)
        space = H.space
        psi0 = excited_state(space, model, config.get("initial", {}).get("excite", "x1"))
        obs = {k: v for k, v in circuit_observables(space, model).items() if k != "X12"}
    jm = collective_operator(space, "c", "Jminus")
    jz = collective_operator(space, "c", "Jz")
    rho0 = np.outer(psi0, psi0.conj())
    proj = np.outer(psi0, psi0.conj())
    from .operators import Operator
    obs["P_initial"] = Operator(space, proj)
    spec = EvolutionSpec(H, rho0, config["horizon_us"], config["samples"],
                         collapse=[(jm, gamma / 2), (jz, gamma_phi / 2)], observables=obs)
    record = evolve_lindblad(spec, dim_cap=lind.get("dim_cap", 4096))
    cols, rows = _dynamics_table(record, {"P_initial": record["P_initial"]})
    summary = {
        "kind": "lindblad", "dimension": space.dim, "j": model.j, "m": model.m,
        "gamma_mhz": lind["gamma_mhz"], "gamma_phi_mhz": lind["gamma_phi_mhz"],
        "trace_drift": record.error_estimate,
        "min_P_initial": float(np.min(record["P_initial"])),
        "max_stationarity_error": float(np.max(np.abs(record["P_initial"] - 1))),
    }
    return ScenarioResult(config.get("name", "lindblad"), cols, rows, summary, {"trajectory": record})


def _run_sweep(config: dict, jobs: int) -> ScenarioResult:
    s = config["sweep"]
    spec = SweepSpec(
        omega1=from_mhz(s["f1_mhz"]), omega2=from_mhz(s["f2_mhz"]),
        omega_c_lo=from_mhz(s["fc_lo_mhz"]), omega_c_hi=from_mhz(s["fc_hi_mhz"]),
        points=s["points"], g1=from_mhz(s["g1_mhz"]), g2=from_mhz(s["g2_mhz"]),
        marker=from_mhz(s["marker_mhz"]) if "marker_mhz" in s else None,
        log_spacing=s.get("log_spacing", True), transfer_k=s.get("transfer_k", 0),
    )
    table = run_sweep(spec, jobs)
    cols = ["fc_mhz", "N_opt", "abs_g_eff_hz", "t_transfer_s", "residual", "dispersive_ratio", "feasible"]
    rows = np.array([[to_mhz(p.omega_c), p.n_opt, abs(to_mhz(p.g_eff)) * 1e6, p.t_transfer * 1e-6,
                      p.residual, p.dispersive_ratio, float(p.feasible)] for p in table])
    valid = [p for p in table if not p.is_gap]
    summary: dict[str, Any] = {
        "kind": "sweep", "points": len(table), "gaps": len(table) - len(valid),
        "max_residual": max((p.residual for p in valid), default=float("nan")),
        "feasibility_note": "N_opt is real-valued; astronomically large ensembles are not experimentally practical",
    }
    if spec.marker is not None:
        mark = min(table, key=lambda p: abs(p.omega_c - spec.marker))
        summary.update({
            "marker_fc_mhz": to_mhz(mark.omega_c), "marker_N_opt": mark.n_opt,
            "marker_abs_g_eff_hz": abs(to_mhz(mark.g_eff)) * 1e6,
            "marker_t_transfer_s": mark.t_transfer * 1e-6,
            "marker_dispersive_ratio": mark.dispersive_ratio,
        })
    return ScenarioResult(config.get("name", "sweep"), cols, rows, summary, {"table": table})


def _run_register(config: dict) -> ScenarioResult:
    reg_cfg = config["register"]
    cfg = dict(config)
    cfg["ensemble"] = {"n": reg_cfg["n"]}
    model = model_from_config(cfg)
    register = PairRegister.ground(reg_cfg["n"])
    history = [register]
    for step in reg_cfg["steps"]:
        register = apply_pulses(register, PulseCommand(step["targets"], Direction(step["direction"])))
        history.append(register)
    rows = []
    worst = 0.0
    for idx, reg in enumerate(history):
        worst = max(worst, verify_subradiance(reg).max_norm)
        rows.append([idx, reg.singlets, reg.j, reg.m, reg.jz, to_mhz(register_to_geff(reg, model))])
    cols = ["step", "singlets", "j", "m", "Jz", "g_eff_mhz"]
    summary = {"kind": "register_demo", "steps": len(history) - 1, "n_qubits": reg_cfg["n"],
               "final_register": str(register), "max_dissipator_norm": worst}
    return ScenarioResult(config.get("name", "register"), cols, np.array(rows, dtype=float), summary)


def run_scenario(config: dict, jobs: int = 1) -> ScenarioResult:
    validate_config(config)
    kind = config["kind"]
    start = time.perf_counter()
    if kind in ("full_dynamics", "effective_dynamics", "compare"):
        result = _run_dynamics(config, kind)
    elif kind == "lindblad":
        result = _run_lindblad(config)
    elif kind == "sweep":
        result = _run_sweep(config, jobs)
    else:
        result = _run_register(config)
    result.summary["runtime_s"] = time.perf_counter() - start
    return result


def write_outputs(result: ScenarioResult, out_dir: Path, plot: bool = False) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{result.name}.csv"
    lines = [",".join(result.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in result.rows]
    csv_path.write_text("\n".join(lines) + "\n")
    summary_path = out_dir / f"{result.name}_summary.txt"
    summary_path.write_text(
        "".join(f"{k}={_fmt(v)}\n" for k, v in {"scenario": result.name, **result.summary}.items()))
    paths = {"csv": csv_path, "summary": summary_path}
    if plot and "P_Q1" in result.columns:
        paths["plot"] = _plot(result, out_dir / f"{result.name}.png")
    return paths


def _plot(result: ScenarioResult, path: Path) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    col = {c: i for i, c in enumerate(result.columns)}
    t = result.rows[:, col["t_us"]]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(t, result.rows[:, col["P_Q1"]], color="tab:red", label="P_Q1")
    ax.plot(t, result.rows[:, col["P_Q2"]], color="tab:blue", label="P_Q2")
    for name, color in (("P_Q1_eff", "tab:red"), ("P_Q2_eff", "tab:blue")):
        if name in col:
            ax.plot(t, result.rows[:, col[name]], "--", color=color, lw=1)
    if "coupler_excitation" in col:
        ax.plot(t, result.rows[:, col["coupler_excitation"]], color="tab:green", label="m deviation")
    ax.set_xlabel("t (us)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

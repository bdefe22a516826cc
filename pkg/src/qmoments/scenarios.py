"""Named experiments, sweeps and machine-readable outputs.

Every dynamical scenario writes a trajectory CSV and a JSON summary that
echoes the resolved inputs and always reports energy drift, Casimir drift
and the minimum uncertainty margin.  Floats are serialized with 17
significant digits and no timestamps, so identical configs produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import indices
from .adiabatic import AdiabaticModel, NoEquilibriumError, integrate_adiabatic, s0_of_q
from .casimir_darboux import (
    DarbouxState1D,
    from_darboux,
    free_particle_s,
    lift_trajectory,
    to_darboux,
    u1,
    u1_spherical_limit,
)
from .dynamics import (
    IntegrationError,
    IntegratorConfig,
    MomentState,
    init_gaussian,
    integrate,
)
from .effective_hamiltonian import PolynomialPotential, build_heff, equations_of_motion
from .moment_algebra import build_bracket_table
from .schrodinger import Grid, energy_expectation, evolve, gaussian_wavepacket, moments_from_wavefunction


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# JSON with fixed float formatting
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return f"{x:.17g}"


def dumps_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k, v in obj.items():
            items.append(f'{pad}  {json.dumps(str(k))}: {dumps_json(v, indent + 1)}')
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {dumps_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(obj)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj) + "\n")


# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

SCENARIOS = (
    "free",
    "harmonic",
    "cubic-tunneling",
    "two-dof-limit",
    "adiabatic-compare",
    "brackets-dump",
    "oracle-diff",
)

_DEFAULTS = {
    "mass": 1.0,
    "hbar": 1.0,
    "order": 2,
    "q0": 0.0,
    "p0": 0.0,
    "sigma": 1.0,
    "ps0": 0.0,
    "casimir": None,
    "classical_mode": False,
    "t_span": [0.0, 10.0],
    "samples": 201,
    "method": "rk45",
    "rtol": 1e-10,
    "atol": 1e-13,
    "step": 1e-3,
    "max_steps": 2_000_000,
    "out_dir": ".",
}

_SCENARIO_DEFAULTS = {
    "free": {"potential": [], "check_threshold": 1e-8},
    "harmonic": {"potential": [0.0, 0.0, 0.5], "check_threshold": 1e-8},
    # cubic default: V = q^2/2 - lambda q^3 with lambda = 0.1, giving a
    # classical barrier of height 1/(54 lambda^2) ~ 1.85 at q = 10/3 in
    # hbar = m = 1 units.  Documented configuration, not a quoted value.
    "cubic-tunneling": {
        "potential": [0.0, 0.0, 0.5, -0.1],
        "energy": 1.2,
        "q0": 0.17,
        "t_span": [0.0, 60.0],
        "stop_margin": 0.5,
        "check_threshold": 1e-8,
        "sweep": None,
        "jobs": 1,
    },
    "two-dof-limit": {
        "alpha": 0.4,
        "p_alpha": 0.7,
        "beta": 1.1,
        "p_beta": 1.3,
        "c1": 0.0,
        "c2": 2.5,
        "epsilons": [1e-1, 1e-2, 1e-3],
        "stability_ratio": 1.3,
    },
    "adiabatic-compare": {
        "potential": [0.0, 0.0, 0.5, 0.0, 0.05],
        "amplitude": 1.0,
        "t_span": [0.0, 12.0],
        "samples": 401,
        "adiabatic_order": 1,
    },
    "brackets-dump": {"table_order": 2, "pairs": 1},
    "oracle-diff": {
        "potential": [0.0, 0.0, 0.5],
        "grid_points": 4096,
        "x_min": -12.0,
        "x_max": 12.0,
        "dt": 1e-3,
        "t_span": [0.0, 2.0],
        "samples": 21,
        "check_threshold": 1e-4,
    },
}

_ORACLE_DEFAULTS = {
    "free": {
        "potential": [],
        "grid_points": 4096,
        "x_min": -20.0,
        "x_max": 20.0,
        "dt": 1e-3,
        "t_span": [0.0, 2.0],
        "samples": 21,
    },
    "harmonic": {
        "potential": [0.0, 0.0, 0.5],
        "grid_points": 4096,
        "x_min": -8.0,
        "x_max": 8.0,
        "dt": 1e-3,
        "t_span": [0.0, float(np.pi)],
        "samples": 21,
    },
}


def resolve_config(raw: dict, scenario: str | None = None) -> dict:
    """Apply defaults and validate; raises ConfigError naming the field."""
    if not isinstance(raw, dict):
        raise ConfigError("config: must be a JSON object")
    cfg = dict(raw)
    scenario = scenario or cfg.get("scenario")
    if scenario is None:
        raise ConfigError("scenario: missing")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown name {scenario!r} (choose from {', '.join(SCENARIOS)})")
    cfg["scenario"] = scenario
    merged = dict(_DEFAULTS)
    merged.update(_SCENARIO_DEFAULTS.get(scenario, {}))
    known = set(merged) | {"scenario"}
    for key in cfg:
        if key not in known:
            raise ConfigError(f"{key}: unknown config key")
    merged.update(cfg)
    _validate(merged)
    return merged


def _require(cond, field, message):
    if not cond:
        raise ConfigError(f"{field}: {message}")


def _validate(cfg):
    _require(isinstance(cfg["mass"], (int, float)) and cfg["mass"] > 0, "mass", "must be > 0")
    _require(isinstance(cfg["hbar"], (int, float)) and cfg["hbar"] > 0, "hbar", "must be > 0")
    _require(isinstance(cfg["order"], int) and cfg["order"] >= 2, "order", "must be an integer >= 2")
    _require(isinstance(cfg["sigma"], (int, float)) and cfg["sigma"] > 0, "sigma", "must be > 0")
    cas = cfg["casimir"]
    _require(cas is None or (isinstance(cas, (int, float)) and cas >= 0), "casimir", "must be >= 0 or null")
    if cas is not None and not cfg["classical_mode"]:
        _require(
            cas >= 0.25 * cfg["hbar"] ** 2 - 1e-15,
            "casimir",
            "below hbar^2/4 requires classical_mode",
        )
    span = cfg["t_span"]
    _require(
        isinstance(span, (list, tuple)) and len(span) == 2 and span[1] > span[0],
        "t_span",
        "must be [t0, t1] with t1 > t0",
    )
    _require(isinstance(cfg["samples"], int) and cfg["samples"] >= 2, "samples", "must be an integer >= 2")
    _require(cfg["method"] in ("rk45", "rk4"), "method", "must be 'rk45' or 'rk4'")
    for key in ("rtol", "atol", "step"):
        _require(isinstance(cfg[key], (int, float)) and cfg[key] > 0, key, "must be > 0")
    _require(isinstance(cfg["max_steps"], int) and cfg["max_steps"] > 0, "max_steps", "must be a positive integer")
    if "potential" in cfg:
        pot = cfg["potential"]
        _require(
            isinstance(pot, list) and all(isinstance(c, (int, float)) for c in pot),
            "potential",
            "must be a list of numbers (coefficients of q^0..q^d)",
        )
    if "energy" in cfg:
        _require(isinstance(cfg["energy"], (int, float)), "energy", "must be a number")
    if "stop_margin" in cfg:
        _require(
            isinstance(cfg["stop_margin"], (int, float)) and cfg["stop_margin"] >= 0,
            "stop_margin",
            "must be >= 0",
        )
    if "jobs" in cfg and cfg["jobs"] is not None:
        _require(isinstance(cfg["jobs"], int) and cfg["jobs"] >= 1, "jobs", "must be an integer >= 1")
    if "amplitude" in cfg:
        _require(
            isinstance(cfg["amplitude"], (int, float)) and cfg["amplitude"] > 0,
            "amplitude",
            "must be > 0",
        )
    if "adiabatic_order" in cfg:
        _require(cfg["adiabatic_order"] in (0, 1), "adiabatic_order", "must be 0 or 1")
    if "epsilons" in cfg:
        eps = cfg["epsilons"]
        _require(
            isinstance(eps, list) and eps and all(isinstance(e, (int, float)) and e > 0 for e in eps),
            "epsilons",
            "must be a non-empty list of positive numbers",
        )
    if "table_order" in cfg:
        _require(
            isinstance(cfg["table_order"], int) and cfg["table_order"] >= 2,
            "table_order",
            "must be an integer >= 2",
        )
        _require(
            isinstance(cfg["pairs"], int) and cfg["pairs"] >= 1,
            "pairs",
            "must be an integer >= 1",
        )
    if "grid_points" in cfg:
        _require(
            isinstance(cfg["grid_points"], int) and cfg["grid_points"] >= 64,
            "grid_points",
            "must be an integer >= 64",
        )
        _require(
            isinstance(cfg["dt"], (int, float)) and cfg["dt"] > 0, "dt", "must be > 0"
        )
        _require(cfg["x_max"] > cfg["x_min"], "x_max", "must exceed x_min")


def integrator_config(cfg) -> IntegratorConfig:
    return IntegratorConfig(
        method=cfg["method"],
        rtol=cfg["rtol"],
        atol=cfg["atol"],
        step=cfg["step"],
        max_steps=cfg["max_steps"],
    )


def _echo_inputs(cfg) -> dict:
    out = {}
    for key in sorted(cfg):
        if key == "out_dir":
            continue
        value = cfg[key]
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Dynamical scenarios
# ---------------------------------------------------------------------------


def _build_field(cfg):
    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    h = build_heff(pot, cfg["order"])
    table = build_bracket_table(cfg["order"], 1)
    return pot, h, equations_of_motion(h, table)


def _initial_state(cfg) -> MomentState:
    return init_gaussian(
        cfg["q0"],
        cfg["p0"],
        cfg["sigma"],
        cfg["ps0"],
        cfg["hbar"],
        cfg["order"],
        casimir=cfg["casimir"],
        classical_mode=cfg["classical_mode"],
    )


def _drifts(traj) -> dict:
    e0 = traj.energy[0]
    c0 = traj.casimir[0]
    escale = max(abs(e0), 1e-300)
    cscale = max(abs(c0), 1e-300)
    return {
        "energy_drift": float(np.max(np.abs(traj.energy - e0)) / escale),
        "casimir_drift": float(np.max(np.abs(traj.casimir - c0)) / cscale),
        "margin_min": float(np.min(traj.margin)),
    }


def run_free(cfg, out_dir) -> tuple:
    _, h, field = _build_field(cfg)
    state0 = _initial_state(cfg)
    t0, t1 = cfg["t_span"]
    traj = integrate(
        field,
        state0,
        (t0, t1),
        integrator_config(cfg),
        t_eval=np.linspace(t0, t1, cfg["samples"]),
    )
    csv_path = os.path.join(out_dir, "trajectory.csv")
    traj.write_csv(csv_path)
    s_num = np.sqrt(traj.column(("D", indices.single(2, 0))))
    # exact free solution: Delta(q^2) is quadratic in t; for ps0 = 0 this is
    # the growth law s0 sqrt(1 + C t^2 / (m^2 s0^4))
    m = float(cfg["mass"])
    dq2_0 = traj.ys[0][traj.layout.index(("D", indices.single(2, 0)))]
    dqp_0 = traj.ys[0][traj.layout.index(("D", indices.single(1, 1)))]
    dp2_0 = traj.ys[0][traj.layout.index(("D", indices.single(0, 2)))]
    tau = traj.times - t0
    s_ref = np.sqrt(dq2_0 + 2 * dqp_0 * tau / m + dp2_0 * tau**2 / m**2)
    if cfg["ps0"] == 0:
        growth = free_particle_s(tau, math.sqrt(dq2_0), traj.casimir[0], m)
        assert np.max(np.abs(growth - s_ref)) < 1e-12 * float(np.max(s_ref))
    deviation = float(np.max(np.abs(s_num - s_ref) / s_ref))
    ok = deviation <= cfg["check_threshold"]
    summary = {
        "scenario": "free",
        "inputs": _echo_inputs(cfg),
        "monitors": _drifts(traj),
        "checks": {
            "max_rel_deviation_from_closed_form": deviation,
            "threshold": cfg["check_threshold"],
            "passed": ok,
        },
        "artifacts": {"trajectory_csv": os.path.basename(csv_path)},
        "ok": bool(ok),
    }
    return summary, traj


def run_harmonic(cfg, out_dir) -> tuple:
    _, h, field = _build_field(cfg)
    state0 = _initial_state(cfg)
    t0, t1 = cfg["t_span"]
    traj = integrate(
        field,
        state0,
        (t0, t1),
        integrator_config(cfg),
        t_eval=np.linspace(t0, t1, cfg["samples"]),
    )
    csv_path = os.path.join(out_dir, "trajectory.csv")
    traj.write_csv(csv_path)
    drifts = _drifts(traj)
    ok = (
        drifts["energy_drift"] <= cfg["check_threshold"]
        and drifts["casimir_drift"] <= 10 * cfg["check_threshold"]
    )
    summary = {
        "scenario": "harmonic",
        "inputs": _echo_inputs(cfg),
        "monitors": drifts,
        "checks": {
            "threshold": cfg["check_threshold"],
            "passed": ok,
        },
        "artifacts": {"trajectory_csv": os.path.basename(csv_path)},
        "ok": bool(ok),
    }
    return summary, traj


def equilibrium_moments(pot: PolynomialPotential, q0: float, casimir: float):
    """Second moments at the fluctuation equilibrium above q0."""
    model = AdiabaticModel(pot, casimir)
    s0 = s0_of_q(model, q0)
    dq2, dqp, dp2 = from_darboux(DarbouxState1D(s0, 0.0, casimir))
    return {
        indices.single(2, 0): dq2,
        indices.single(1, 1): dqp,
        indices.single(0, 2): dp2,
    }


def tunneling_cell(cfg, q0: float, energy: float):
    """Classify one (q0, energy) cell: bypassed, trapped or error."""
    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    h = build_heff(pot, cfg["order"])
    table = build_bracket_table(cfg["order"], 1)
    field = equations_of_motion(h, table)
    casimir = cfg["casimir"] if cfg["casimir"] is not None else 0.25 * cfg["hbar"] ** 2
    barrier_q, barrier_v = cubic_barrier(pot)
    record = {"q0": q0, "energy": energy}
    try:
        moments = equilibrium_moments(pot, q0, casimir)
        rest = h.evaluate(
            MomentState(q0, 0.0, moments, cfg["hbar"], cfg["order"], cfg["classical_mode"], validate=False)
        )
        if energy < rest:
            raise ValueError(f"energy {energy:g} below the rest energy {rest:g} at q0")
        p0 = math.sqrt(2.0 * float(cfg["mass"]) * (energy - rest))
        state0 = MomentState(
            q0, p0, moments, cfg["hbar"], cfg["order"], cfg["classical_mode"]
        )
        stop = barrier_q + cfg["stop_margin"]

        def crossed(t, y):
            return y[0] - stop

        crossed.terminal = True
        crossed.direction = 1
        traj = integrate(
            field,
            state0,
            tuple(cfg["t_span"]),
            integrator_config(cfg),
            events=[crossed],
        )
        drifts = _drifts(traj)
        bypassed = traj.info.get("status") == 1
        record.update(
            {
                "classification": "bypassed" if bypassed else "trapped",
                "max_q": float(np.max(traj.ys[:, 0])),
                "t_final": float(traj.times[-1]),
                "energy_drift": drifts["energy_drift"],
                "casimir_drift": drifts["casimir_drift"],
                "below_classical_barrier": bool(energy < barrier_v),
            }
        )
        return record, traj
    except (IntegrationError, NoEquilibriumError, ValueError) as exc:
        record.update({"classification": "error", "reason": str(exc)})
        return record, None


def cubic_barrier(pot: PolynomialPotential):
    """Position and height of the local maximum of a cubic-type potential."""
    coeffs = pot.derivative_coefficients(1)
    roots = np.roots([float(c) for c in reversed(coeffs)])
    candidates = [
        float(r.real)
        for r in roots
        if abs(r.imag) < 1e-12 and pot.value(float(r.real), 2) < 0
    ]
    if not candidates:
        raise ConfigError("potential: no barrier (local maximum) found")
    barrier_q = min(candidates, key=lambda q: abs(q))
    return barrier_q, pot.value(barrier_q)


def effective_saddle(pot: PolynomialPotential, casimir: float):
    """Saddle of V(q) + V''(q) s^2/2 + C/(2 m s^2) in the (q, s) plane.

    Critical points satisfy s^4 = C/(m V''(q)) and V'(q) + V'''(q) s^2/2 = 0;
    the saddle is the higher-energy root.  Solved numerically by bisection
    on q between the well and the classical barrier.
    """
    from scipy.optimize import brentq

    m = float(pot.mass)

    def s2_of(q):
        vpp = pot.value(q, 2)
        if vpp <= 0:
            return None
        return math.sqrt(casimir / (m * vpp))

    def g(q):
        s2 = s2_of(q)
        if s2 is None:
            return math.nan
        return pot.value(q, 1) + 0.5 * pot.value(q, 3) * s2

    barrier_q, _ = cubic_barrier(pot)
    qs = np.linspace(1e-3, barrier_q * 0.999, 2001)
    vals = [g(q) for q in qs]
    crossings = [
        (qs[i], qs[i + 1])
        for i in range(len(qs) - 1)
        if math.isfinite(vals[i]) and math.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0
    ]
    if not crossings:
        raise ConfigError("potential: no effective-potential critical points found")
    points = []
    for lo, hi in crossings:
        q = brentq(g, lo, hi, xtol=1e-12)
        s2 = s2_of(q)
        w = pot.value(q) + 0.5 * pot.value(q, 2) * s2 + casimir / (2 * m * s2)
        points.append((q, math.sqrt(s2), w))
    points.sort(key=lambda t: t[2])
    return points[-1]


def run_cubic_tunneling(cfg, out_dir) -> tuple:
    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    barrier_q, barrier_v = cubic_barrier(pot)
    record, traj = tunneling_cell(cfg, cfg["q0"], cfg["energy"])
    if traj is None:
        raise IntegrationError("tunneling run failed: " + record.get("reason", ""))
    csv_path = os.path.join(out_dir, "trajectory.csv")
    traj.write_csv(csv_path)
    ok = (
        record["classification"] == "bypassed"
        and record["energy_drift"] <= cfg["check_threshold"]
    )
    summary = {
        "scenario": "cubic-tunneling",
        "inputs": _echo_inputs(cfg),
        "barrier": {"position": barrier_q, "height": barrier_v},
        "monitors": {
            "energy_drift": record["energy_drift"],
            "casimir_drift": record["casimir_drift"],
            "margin_min": float(np.min(traj.margin)),
        },
        "checks": {
            "classification": record["classification"],
            "below_classical_barrier": record["below_classical_barrier"],
            "threshold": cfg["check_threshold"],
            "passed": ok,
        },
        "artifacts": {"trajectory_csv": os.path.basename(csv_path)},
        "ok": bool(ok),
    }
    return summary, traj


def _sweep_values(spec, field):
    if isinstance(spec, list):
        values = spec
    elif isinstance(spec, dict) and {"min", "max", "count"} <= set(spec):
        values = list(np.linspace(spec["min"], spec["max"], int(spec["count"])))
    else:
        raise ConfigError(f"sweep.{field}: must be a list or {{min, max, count}}")
    if not values:
        raise ConfigError(f"sweep.{field}: empty range")
    return [float(v) for v in values]


def _sweep_cell_worker(args):
    cfg, q0, energy = args
    record, _ = tunneling_cell(cfg, q0, energy)
    return record


def run_sweep(cfg, out_dir) -> dict:
    """Grid of tunneling runs with per-cell classification.

    Cells are independent and may run in parallel; results are merged in
    grid order so the CSV is deterministic regardless of worker count.
    """
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("sweep: missing sweep ranges")
    if not isinstance(sweep, dict) or set(sweep) != {"q0", "energy"}:
        raise ConfigError("sweep: expected exactly the keys 'q0' and 'energy'")
    q0s = _sweep_values(sweep["q0"], "q0")
    energies = _sweep_values(sweep["energy"], "energy")
    cells = [(cfg, q0, e) for q0 in q0s for e in energies]
    jobs = int(cfg.get("jobs") or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_sweep_cell_worker, cells, chunksize=8))
    else:
        records = [_sweep_cell_worker(c) for c in cells]

    grid_path = os.path.join(out_dir, "sweep_grid.csv")
    with open(grid_path, "w", encoding="utf-8") as fh:
        fh.write("q0,energy,classification,max_q,t_final,energy_drift,casimir_drift\n")
        for rec in records:
            if rec["classification"] == "error":
                fh.write(
                    f"{rec['q0']:.17g},{rec['energy']:.17g},error,nan,nan,nan,nan\n"
                )
            else:
                fh.write(
                    ",".join(
                        [
                            f"{rec['q0']:.17g}",
                            f"{rec['energy']:.17g}",
                            rec["classification"],
                            f"{rec['max_q']:.17g}",
                            f"{rec['t_final']:.17g}",
                            f"{rec['energy_drift']:.17g}",
                            f"{rec['casimir_drift']:.17g}",
                        ]
                    )
                    + "\n"
                )
    counts = {"bypassed": 0, "trapped": 0, "error": 0}
    for rec in records:
        counts[rec["classification"]] += 1
    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    barrier_q, barrier_v = cubic_barrier(pot)
    drifts = [r["energy_drift"] for r in records if r["classification"] != "error"]
    summary = {
        "scenario": "cubic-tunneling-sweep",
        "inputs": _echo_inputs(cfg),
        "barrier": {"position": barrier_q, "height": barrier_v},
        "grid": {"q0_count": len(q0s), "energy_count": len(energies)},
        "classification_counts": counts,
        "max_energy_drift": float(max(drifts)) if drifts else None,
        "artifacts": {"grid_csv": os.path.basename(grid_path)},
        "ok": bool(counts["bypassed"] > 0 and counts["trapped"] > 0),
    }
    return summary


# ---------------------------------------------------------------------------
# Algebraic scenarios
# ---------------------------------------------------------------------------


def run_two_dof_limit(cfg, out_dir) -> dict:
    """Spherical-coordinate limit of U1 along the scaling path.

    p_alpha is scaled by eps and C2 by eps^4; the deviation from
    p_beta^2 + C1/(2 sin^2 beta) must shrink linearly with a stable fitted
    slope.  The path stays in the real domain of the radicand for C1 = 0
    (the classical floor); positive C1 leaves the domain along this path.
    """
    limit = u1_spherical_limit(cfg["beta"], cfg["p_beta"], cfg["c1"])
    rows = []
    ks = []
    for eps in cfg["epsilons"]:
        value = u1(
            cfg["alpha"],
            eps * cfg["p_alpha"],
            cfg["beta"],
            cfg["p_beta"],
            cfg["c1"],
            eps**4 * cfg["c2"],
        )
        dev = abs(value - limit)
        ks.append(dev / eps)
        rows.append({"epsilon": eps, "u1": value, "deviation": dev, "fitted_k": dev / eps})
    kmax, kmin = max(ks), min(ks)
    ratio = kmax / kmin if kmin > 0 else math.inf
    ok = ratio <= cfg["stability_ratio"]
    summary = {
        "scenario": "two-dof-limit",
        "inputs": _echo_inputs(cfg),
        "limit_value": limit,
        "rows": rows,
        "k_ratio": ratio,
        "checks": {"stability_ratio": cfg["stability_ratio"], "passed": ok},
        "ok": bool(ok),
    }
    write_json(os.path.join(out_dir, "two_dof_limit.json"), summary)
    return summary


def run_brackets_dump(cfg, out_dir) -> dict:
    table = build_bracket_table(cfg["table_order"], cfg["pairs"], validate=True)
    payload = table.to_jsonable()
    path = os.path.join(out_dir, "brackets.json")
    write_json(path, payload)
    return {
        "scenario": "brackets-dump",
        "inputs": _echo_inputs(cfg),
        "entries": len(payload["entries"]),
        "artifacts": {"brackets_json": os.path.basename(path)},
        "ok": True,
    }


# ---------------------------------------------------------------------------
# Wavefunction oracle scenarios
# ---------------------------------------------------------------------------


def run_oracle(name: str, cfg_overrides: dict | None, out_dir: str) -> dict:
    """Evolve the named scenario with the wavefunction solver and export
    extracted moments in the trajectory CSV schema."""
    if name not in _ORACLE_DEFAULTS:
        raise ConfigError(f"scenario: oracle supports {', '.join(_ORACLE_DEFAULTS)}")
    cfg = dict(_DEFAULTS)
    cfg.update(_ORACLE_DEFAULTS[name])
    cfg.update(cfg_overrides or {})
    cfg["scenario"] = name
    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    h = build_heff(pot, cfg["order"])
    grid = Grid(cfg["x_min"], cfg["x_max"], cfg["grid_points"])
    wf = gaussian_wavepacket(grid, cfg["q0"], cfg["p0"], cfg["sigma"], cfg["hbar"], cfg["mass"])
    t0, t1 = cfg["t_span"]
    times = np.linspace(t0, t1, cfg["samples"])
    dt = cfg["dt"]
    rows = []
    quality_max = 0.0
    current_t = t0
    layout_idx = indices.iter_indices(cfg["order"], 1)
    for target in times:
        steps = int(round((target - current_t) / dt))
        if steps > 0:
            wf = evolve(pot, wf, dt, steps)
            current_t += steps * dt
        state, quality = moments_from_wavefunction(wf, cfg["order"])
        quality_max = max(quality_max, quality)
        energy = energy_expectation(wf, pot)
        casimir = state.casimir()
        margin = casimir - 0.25 * cfg["hbar"] ** 2
        # the time column records the step-resolved time actually reached
        rows.append(
            [current_t, state.q, state.p]
            + [state.moments[idx] for idx in layout_idx]
            + [energy, casimir, margin]
        )
    csv_path = os.path.join(out_dir, "oracle_trajectory.csv")
    header = ["t", "q", "p"] + [indices.csv_name(i) for i in layout_idx] + [
        "energy",
        "casimir",
        "margin",
    ]
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    summary = {
        "scenario": f"oracle-{name}",
        "inputs": _echo_inputs(cfg),
        "extraction_quality_max": quality_max,
        "artifacts": {"oracle_csv": os.path.basename(csv_path)},
        "ok": True,
    }
    return summary


def run_oracle_diff(cfg, out_dir) -> dict:
    """Moment dynamics and wavefunction oracle on the same configuration.

    The oracle runs first; the moment dynamics is then sampled at the
    step-resolved times the oracle actually reached, so the diff never
    aliases time-grid rounding into a moment deviation.
    """
    oracle_summary = run_oracle(
        "free" if not cfg["potential"] else "harmonic",
        {
            k: cfg[k]
            for k in (
                "potential",
                "grid_points",
                "x_min",
                "x_max",
                "dt",
                "t_span",
                "samples",
                "q0",
                "p0",
                "sigma",
                "hbar",
                "mass",
                "order",
            )
        },
        out_dir,
    )
    oracle_rows = _read_csv(os.path.join(out_dir, "oracle_trajectory.csv"))
    times = np.array([r["t"] for r in oracle_rows])
    _, h, field = _build_field(cfg)
    state0 = _initial_state(cfg)
    traj = integrate(
        field, state0, (times[0], times[-1]), integrator_config(cfg), t_eval=times
    )
    traj.write_csv(os.path.join(out_dir, "trajectory.csv"))
    deviations = {}
    for col in ("Delta_q2", "Delta_qp", "Delta_p2", "q", "p"):
        a = np.array([r[col] for r in oracle_rows])
        b = traj.column(_column_var(col))
        scale = max(float(np.max(np.abs(b))), 1e-12)
        deviations[col] = float(np.max(np.abs(a - b)) / scale)
    worst = max(deviations.values())
    ok = worst <= cfg["check_threshold"]
    summary = {
        "scenario": "oracle-diff",
        "inputs": _echo_inputs(cfg),
        "monitors": _drifts(traj),
        "oracle_quality": oracle_summary["extraction_quality_max"],
        "deviations": deviations,
        "checks": {"max_rel_deviation": worst, "threshold": cfg["check_threshold"], "passed": ok},
        "artifacts": {
            "trajectory_csv": "trajectory.csv",
            "oracle_csv": "oracle_trajectory.csv",
        },
        "ok": bool(ok),
    }
    return summary


def _column_var(col):
    if col == "q":
        return ("q", 0)
    if col == "p":
        return ("p", 0)
    mapping = {
        "Delta_q2": indices.single(2, 0),
        "Delta_qp": indices.single(1, 1),
        "Delta_p2": indices.single(0, 2),
    }
    return ("D", mapping[col])


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            values = line.strip().split(",")
            rows.append({k: float(v) for k, v in zip(header, values)})
    return rows


# ---------------------------------------------------------------------------
# Adiabatic comparison
# ---------------------------------------------------------------------------


def adiabatic_compare_run(cfg):
    """Shared machinery for the adiabatic comparison.

    The full order-2 trajectory starts at a turning point on the
    first-order slaved manifold s = s0(q) + delta_s, so the comparison
    isolates the slaving error rather than an initial transient.  The
    slaved fluctuation is evaluated along the full trajectory's q(t);
    the independently integrated adiabatic q(t) quantifies the
    back-reaction error.
    """
    from .adiabatic import adiabatic_acceleration, delta_s_correction

    pot = PolynomialPotential(cfg["potential"], cfg["mass"])
    casimir = cfg["casimir"] if cfg["casimir"] is not None else 0.25 * cfg["hbar"] ** 2
    model = AdiabaticModel(pot, casimir, order=1)
    h = build_heff(pot, cfg["order"])
    table = build_bracket_table(cfg["order"], 1)
    field = equations_of_motion(h, table)
    q0 = cfg["amplitude"]
    s_init = s0_of_q(model, q0)
    if cfg["adiabatic_order"] >= 1:
        s_init += delta_s_correction(model, q0, 0.0, adiabatic_acceleration(model, q0, 0.0))
    dq2, dqp, dp2 = from_darboux(DarbouxState1D(s_init, 0.0, casimir))
    moments = {
        indices.single(2, 0): dq2,
        indices.single(1, 1): dqp,
        indices.single(0, 2): dp2,
    }
    state0 = MomentState(q0, 0.0, moments, cfg["hbar"], cfg["order"], cfg["classical_mode"])
    t0, t1 = cfg["t_span"]
    times = np.linspace(t0, t1, cfg["samples"])
    traj = integrate(field, state0, (t0, t1), integrator_config(cfg), t_eval=times)
    _, q_ad, _, _, _ = integrate_adiabatic(
        model, q0, 0.0, (t0, t1), times, rtol=cfg["rtol"], atol=cfg["atol"]
    )
    s_full = np.sqrt(traj.column(("D", indices.single(2, 0))))
    q_full = traj.column(("q", 0))
    qdot_full = traj.column(("p", 0)) / float(cfg["mass"])
    s_ad0 = np.array([s0_of_q(model, q) for q in q_full])
    ds = np.array(
        [
            delta_s_correction(model, q, qd, adiabatic_acceleration(model, q, qd))
            for q, qd in zip(q_full, qdot_full)
        ]
    )
    s_ad1 = s_ad0 + ds
    errors = {
        "max_q_error": float(np.max(np.abs(q_full - q_ad))),
        "max_s_error_order0": float(np.max(np.abs(s_full - s_ad0))),
        "max_s_error_order1": float(np.max(np.abs(s_full - s_ad1))),
    }
    return traj, times, q_full, s_full, q_ad, s_ad0, s_ad1, errors


def run_adiabatic_compare(cfg, out_dir) -> dict:
    """Full order-2 moment dynamics against the adiabatic approximation."""
    traj, times, q_full, s_full, q_ad, s_ad0, s_ad1, errors = adiabatic_compare_run(cfg)
    csv_path = os.path.join(out_dir, "adiabatic_compare.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t,q_full,s_full,q_adiabatic,s_adiabatic0,s_adiabatic1\n")
        for row in zip(times, q_full, s_full, q_ad, s_ad0, s_ad1):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    summary = {
        "scenario": "adiabatic-compare",
        "inputs": _echo_inputs(cfg),
        "monitors": _drifts(traj),
        "errors": errors,
        "artifacts": {"compare_csv": os.path.basename(csv_path)},
        "ok": True,
    }
    write_json(os.path.join(out_dir, "adiabatic_errors.json"), errors)
    return summary


# ---------------------------------------------------------------------------
# Trajectory transforms
# ---------------------------------------------------------------------------


def transform_trajectory(in_path, out_path, target: str, mass: float = 1.0):
    """Convert a trajectory CSV between moment, Darboux and plane charts."""
    rows = _read_csv(in_path)
    if not rows:
        raise ConfigError("input: empty trajectory")
    cols = set(rows[0])
    with open(out_path, "w", encoding="utf-8") as fh:
        if target == "darboux":
            _need(cols, {"t", "Delta_q2", "Delta_qp", "Delta_p2"}, "darboux")
            fh.write("t,s,p_s,casimir\n")
            for r in rows:
                d = to_darboux(r["Delta_q2"], r["Delta_qp"], r["Delta_p2"])
                fh.write(
                    f"{r['t']:.17g},{d.s:.17g},{d.p_s:.17g},{d.casimir:.17g}\n"
                )
        elif target == "plane":
            _need(cols, {"t", "Delta_q2", "Delta_qp", "Delta_p2"}, "plane")
            ts = np.array([r["t"] for r in rows])
            darboux = [
                to_darboux(r["Delta_q2"], r["Delta_qp"], r["Delta_p2"]) for r in rows
            ]
            casimir = darboux[0].casimir
            states = lift_trajectory(
                ts,
                np.array([d.s for d in darboux]),
                np.array([d.p_s for d in darboux]),
                casimir,
                mass,
            )
            fh.write("t,X,Y,p_X,p_Y,p_phi\n")
            for t, ps in zip(ts, states):
                fh.write(
                    f"{t:.17g},{ps.x:.17g},{ps.y:.17g},{ps.p_x:.17g},{ps.p_y:.17g},{ps.p_phi:.17g}\n"
                )
        elif target == "moments":
            _need(cols, {"t", "s", "p_s", "casimir"}, "moments")
            fh.write("t,Delta_q2,Delta_qp,Delta_p2\n")
            for r in rows:
                m = from_darboux(DarbouxState1D(r["s"], r["p_s"], r["casimir"]))
                fh.write(f"{r['t']:.17g}," + ",".join(f"{v:.17g}" for v in m) + "\n")
        else:
            raise ConfigError("to: must be darboux, plane or moments")


def _need(cols, needed, target):
    missing = needed - cols
    if missing:
        raise ConfigError(
            f"input: columns {sorted(missing)} required for --to {target}"
        )


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def run_scenario(cfg: dict, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    scenario = cfg["scenario"]
    if scenario == "free":
        summary, _ = run_free(cfg, out_dir)
    elif scenario == "harmonic":
        summary, _ = run_harmonic(cfg, out_dir)
    elif scenario == "cubic-tunneling":
        summary, _ = run_cubic_tunneling(cfg, out_dir)
    elif scenario == "two-dof-limit":
        summary = run_two_dof_limit(cfg, out_dir)
    elif scenario == "adiabatic-compare":
        summary = run_adiabatic_compare(cfg, out_dir)
    elif scenario == "brackets-dump":
        summary = run_brackets_dump(cfg, out_dir)
    elif scenario == "oracle-diff":
        summary = run_oracle_diff(cfg, out_dir)
    else:
        raise ConfigError(f"scenario: {scenario} is not runnable via simulate")
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary

"""
LangGraph Workflow - one lab run as a state machine

    prepare -> execute -> evaluate -> report -> END
                  \\-> report (on error)
"""

import math
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from langgraph.graph import END, StateGraph

from . import __version__
from .dynamics import (
    StaticHamiltonian,
    Trajectory,
    collapse_ratio,
    compare_quantum_semiclassical,
    displaced_coefficient_dynamics,
    fidelity,
    frame_consistency,
    inversion_gap_sweep,
    leakage_onset_time,
    omega_zero_oracle_gap,
    propagate,
    reversed_hamiltonian,
    spin_conditional_displaced_evolution,
)
from .errors import ConfigError, NumericFailure, TruncationTooSmall
from .fockspace import coherent_state, displacement_matrix, product_state, spin_state
from .hamiltonians import DisplacedBasisHamiltonian, h_q, h_q_rotating, h_sc
from .limits import diagram_commutes, fock_limit_check, semiclassical_sweep, transformation_limit_check
from .models import Truncation
from .state import RunState
from .storage.artifacts import ArtifactStore
from .storage.config_loader import RunConfig, ensure_writable
from .tools.identity_checks import evaluate_checks, run_identity_checks
from .tools.plot_template import render_plot_script
from .utils.logger import setup_logger

logger = setup_logger(__name__)

Table = Tuple[str, List[str], List[Sequence[Any]]]


def make_check(
    name: str, description: str, value: float, tolerance: float, passed: Optional[bool] = None
) -> Dict[str, Any]:
    """passed defaults to value <= tolerance"""
    if passed is None:
        passed = value <= tolerance
    return {
        "name": name,
        "description": description,
        "max_residual": float(value),
        "tolerance": float(tolerance),
        "passed": bool(passed),
    }


def decreasing_check(name: str, values: Sequence[float], floor: float = 1.0e-15) -> Dict[str, Any]:
    """Strictly decreasing, or identically below floor"""
    values = [float(v) for v in values]
    strictly = all(b < a for a, b in zip(values, values[1:]))
    vanishing = max(values) <= floor
    worst = max((b / a for a, b in zip(values, values[1:]) if a > 0), default=0.0)
    return make_check(name, "strictly decreasing along the sequence", worst, 1.0, strictly or vanishing)


class RunGraph:
    """LangGraph-based run workflow for every CLI command"""

    def __init__(self):
        self._executors: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
            "check-identities": self._run_check_identities,
            "sweep": self._run_sweep,
            "fock-limit": self._run_fock_limit,
            "transform-limit": self._run_transform_limit,
            "evolve": self._run_evolve,
            "compare": self._run_compare,
            "diagram": self._run_diagram,
        }
        self.graph = self._build_graph()

    def _build_graph(self) -> StateGraph:
        """Build the LangGraph workflow"""
        workflow = StateGraph(RunState)

        workflow.add_node("prepare", self.prepare_node)
        workflow.add_node("execute", self.execute_node)
        workflow.add_node("evaluate", self.evaluate_node)
        workflow.add_node("report", self.report_node)

        workflow.set_entry_point("prepare")
        workflow.add_conditional_edges(
            "prepare",
            self.route_after_prepare,
            {"continue": "execute", "error": "report"},
        )
        workflow.add_conditional_edges(
            "execute",
            self.route_after_execute,
            {"evaluate": "evaluate", "error": "report"},
        )
        workflow.add_edge("evaluate", "report")
        workflow.add_edge("report", END)

        return workflow.compile()

    # ========== NODE FUNCTIONS ==========

    def prepare_node(self, state: RunState) -> RunState:
        """Node: check the output directory and build the run header"""
        config = state["config"]
        logger.info(f"[NODE: prepare] command={config.command} seed={config.seed}")
        state["artifacts"] = []
        state["checks"] = []
        try:
            out_dir = ensure_writable(config.output.path)
            state["out_dir"] = str(out_dir)
            header = {
                "command": config.command,
                "version": __version__,
                "seed": config.seed,
                "tolerance_scale": config.tolerance_scale,
            }
            header.update(
                config.model_dump(
                    mode="json",
                    by_alias=True,
                    exclude_none=True,
                    exclude={"command", "seed", "tolerance_scale"},
                )
            )
            state["header"] = header
            state["phase"] = "prepared"
        except ConfigError as e:
            logger.error(f"[NODE: prepare] Error: {e}")
            state["error"] = str(e)
            state["error_kind"] = "config"
        return state

    def execute_node(self, state: RunState) -> RunState:
        """Node: run the command's computation"""
        config = state["config"]
        logger.info(f"[NODE: execute] Running {config.command}...")
        try:
            outcome = self._executors[config.command](config)
            state["results"] = outcome["results"]
            state["checks"] = outcome["checks"]
            state["header"] = {**state["header"], "resolved": outcome.get("resolved", {})}
            state["results"]["tables"] = outcome.get("tables", [])
            state["phase"] = "executed"
            logger.info(f"[NODE: execute] {len(outcome['checks'])} checks collected")
        except NumericFailure as e:
            logger.error(f"[NODE: execute] Numeric failure: {e}")
            state["error"] = f"{type(e).__name__}: {e}"
            state["error_kind"] = "numeric"
        except ConfigError as e:
            logger.error(f"[NODE: execute] Configuration error: {e}")
            state["error"] = str(e)
            state["error_kind"] = "config"
        except Exception as e:
            logger.error(f"[NODE: execute] Error: {e}", exc_info=True)
            state["error"] = f"{type(e).__name__}: {e}"
            state["error_kind"] = "internal"
        return state

    def evaluate_node(self, state: RunState) -> RunState:
        """Node: summarize pass/fail"""
        logger.info("[NODE: evaluate] Evaluating checks...")
        summary = evaluate_checks(state["checks"])
        state["all_passed"] = summary["all_passed"]
        state["first_failure"] = summary["first_failure"]
        state["phase"] = "evaluated"
        logger.info(
            f"[NODE: evaluate] {summary['passed_count']}/{summary['total']} passed, "
            f"first failure: {summary['first_failure']}"
        )
        return state

    def report_node(self, state: RunState) -> RunState:
        """Node: write CSV tables, the JSON report and the plot script"""
        if "out_dir" not in state:
            logger.warning("[NODE: report] No output directory, nothing written")
            return state
        logger.info(f"[NODE: report] Writing artifacts to {state['out_dir']}")
        config = state["config"]
        store = ArtifactStore(state["out_dir"])
        results = dict(state.get("results") or {})
        tables: List[Table] = results.pop("tables", [])
        try:
            for name, columns, rows in tables:
                store.write_csv(name, state["header"], columns, rows)
            csv_names = [name for name, _, _ in tables]
            script = f"plot_{config.command.replace('-', '_')}.py"
            store.write_text(script, render_plot_script(config.command, csv_names))
            report = {
                "command": config.command,
                "version": __version__,
                "seed": config.seed,
                "tolerance_scale": config.tolerance_scale,
                "inputs": state["header"],
                "results": results,
                "checks": state.get("checks", []),
                "summary": {
                    "total": len(state.get("checks", [])),
                    "passed_count": sum(1 for c in state.get("checks", []) if c["passed"]),
                    "all_passed": state.get("all_passed"),
                    "first_failure": state.get("first_failure"),
                },
                "error": state.get("error"),
                "artifacts": store.written + ["report.json"],
            }
            store.write_json("report.json", report)
            state["artifacts"] = list(store.written)
            state["phase"] = "reported"
        except OSError as e:
            logger.error(f"[NODE: report] Error: {e}")
            state["error"] = str(e)
            state["error_kind"] = "internal"
        return state

    # ========== ROUTING FUNCTIONS ==========

    def route_after_prepare(self, state: RunState) -> Literal["continue", "error"]:
        route = "error" if state.get("error") else "continue"
        logger.info(f"[ROUTER: prepare] -> '{route}'")
        return route

    def route_after_execute(self, state: RunState) -> Literal["evaluate", "error"]:
        route = "error" if state.get("error") else "evaluate"
        logger.info(f"[ROUTER: execute] -> '{route}'")
        return route

    # ========== COMMANDS ==========

    def _run_check_identities(self, config: RunConfig) -> Dict[str, Any]:
        results = run_identity_checks(config.checks.samples, config.seed, config.tolerance_scale)
        rows = [
            (i, r["name"], r["max_residual"], r["tolerance"], r["passed"]) for i, r in enumerate(results)
        ]
        return {
            "results": {"check_count": len(results)},
            "checks": results,
            "tables": [("checks.csv", ["index", "name", "max_residual", "tolerance", "passed"], rows)],
            "resolved": {"samples": config.checks.samples},
        }

    def _run_sweep(self, config: RunConfig) -> Dict[str, Any]:
        sweep = config.sweep_config()
        report = semiclassical_sweep(sweep, config.params)
        rows = [(r.lam, r.alpha_mag, r.offdiag_norm, r.diag_residual) for r in report.rows]
        order_rows = [
            (report.rows[i].lam, k, mags[i])
            for k, mags in report.offdiag_by_order.items()
            for i in range(len(report.rows))
        ]
        checks = [
            decreasing_check("offdiag_norm_decreasing", [r.offdiag_norm for r in report.rows]),
            decreasing_check("diag_residual_decreasing", [r.diag_residual for r in report.rows]),
        ]
        for k, slope in report.fitted_exponents.items():
            tolerance = 0.1 * k * config.tolerance_scale
            checks.append(
                make_check(
                    f"exponent_k{k}",
                    f"fitted off-diagonal exponent within 10% of {k}",
                    abs(slope - k),
                    tolerance,
                    abs(slope - k) <= tolerance,
                )
            )
        return {
            "results": {
                "amplitude": report.amplitude,
                "fitted_exponents": {str(k): v for k, v in report.fitted_exponents.items()},
                "fitted_prefactors": {str(k): v for k, v in report.fitted_prefactors.items()},
            },
            "checks": checks,
            "tables": [
                ("sweep.csv", ["lambda", "alpha_mag", "offdiag_norm", "diag_residual"], rows),
                ("sweep_orders.csv", ["lambda", "k", "offdiag_norm"], order_rows),
            ],
            "resolved": {
                "time_samples": sweep.resolved_times(config.params.omega0),
                "probe_levels": [list(p) for p in sweep.probe_levels],
            },
        }

    def _run_fock_limit(self, config: RunConfig) -> Dict[str, Any]:
        section = config.fock
        rows, checks = [], []
        for amplitude in section.amplitudes:
            for k in section.k_values:
                errors = {}
                for variant in ("plain", "szego"):
                    points = fock_limit_check(config.params, amplitude, k, section.n_sequence, variant)
                    errors[variant] = [p.abs_err for p in points]
                    rows.extend(
                        (amplitude, k, variant, p.n, p.element_value, p.bessel_target, p.abs_err) for p in points
                    )
                    label = f"abs_err_decreasing_A{amplitude}_k{k}_{variant}"
                    checks.append(decreasing_check(label, errors[variant]))
                excess = max(s - p for s, p in zip(errors["szego"], errors["plain"]))
                checks.append(
                    make_check(
                        f"szego_not_worse_A{amplitude}_k{k}",
                        "szego abs_err <= plain abs_err at every n",
                        excess,
                        0.0,
                        excess <= 0.0,
                    )
                )
        columns = ["amplitude", "k", "variant", "n", "element_value", "bessel_target", "abs_err"]
        return {"results": {"points": len(rows)}, "checks": checks, "tables": [("fock_limit.csv", columns, rows)]}

    def _run_transform_limit(self, config: RunConfig) -> Dict[str, Any]:
        section = config.transform
        points = transformation_limit_check(
            config.params,
            section.amplitude,
            section.lambda_sequence,
            section.time_samples,
            section.phase,
            section.probe_levels,
            config.truncation,
        )
        rows = [(p.lam, section.amplitude / p.lam, p.deviation) for p in points]
        checks = [decreasing_check("deviation_decreasing", [p.deviation for p in points])]
        truncations = {}
        for lam in section.lambda_sequence:
            trunc = config.truncation or Truncation.for_displacement(section.amplitude / lam, section.probe_levels)
            truncations[str(lam)] = trunc.N
        return {
            "results": {"deviations": [p.deviation for p in points]},
            "checks": checks,
            "tables": [("transform_limit.csv", ["lambda", "alpha_mag", "deviation"], rows)],
            "resolved": {"truncation_N": truncations},
        }

    def _run_diagram(self, config: RunConfig) -> Dict[str, Any]:
        section = config.diagram
        big, small = section.lambda_small
        rows, checks = [], []
        for amplitude in section.amplitudes:
            deviations = []
            for lam in (big, small):
                result = diagram_commutes(
                    config.params, amplitude, lam, section.time, config.cutoffs, section.level
                )
                deviations.append(result.deviation)
                rows.append((amplitude, lam, result.deviation))
            ratio = deviations[0] / deviations[1] if deviations[1] > 0 else math.inf
            required = big / small
            checks.append(
                make_check(
                    f"diagram_ratio_A{amplitude}",
                    "deviation shrinks at least linearly with lambda_small",
                    ratio,
                    required,
                    ratio >= required / config.tolerance_scale,
                )
            )
        return {
            "results": {"pairs": len(section.amplitudes)},
            "checks": checks,
            "tables": [("diagram.csv", ["amplitude", "lambda_small", "deviation"], rows)],
        }

    def _run_evolve(self, config: RunConfig) -> Dict[str, Any]:
        model = config.evolve.model
        prop = config.propagation
        spin0 = spin_state(config.field.spin if config.field else "+z")
        if model == "semiclassical":
            run = self._evolve_semiclassical(config, spin0)
        elif model == "displaced":
            run = self._evolve_displaced(config, spin0)
        else:
            run = self._evolve_fock(config, spin0)
        provider, traj, amplitudes, results, resolved, checks = run

        results = {"model": model, **results, "norm_drift": traj.norm_drift}
        resolved.update({"dt": traj.dt, "step_halvings": traj.halvings})
        checks.append(
            make_check(
                "norm_drift",
                "norm stays within norm_tolerance",
                traj.norm_drift,
                prop.norm_tolerance,
                traj.norm_drift <= prop.norm_tolerance,
            )
        )
        checks.append(self._time_reversal_check(provider, traj, prop, config.tolerance_scale))
        return {
            "results": results,
            "checks": checks,
            "tables": [("evolve.csv", *self._trajectory_table(traj, amplitudes))],
            "resolved": resolved,
        }

    def _evolve_semiclassical(self, config: RunConfig, spin0: np.ndarray):
        params, drive = config.params, config.drive

        def provider(t: float) -> np.ndarray:
            return h_sc(params, drive, t)

        traj = propagate(provider, spin0, config.propagation)
        checks = []
        if params.omega == 0:
            gap = omega_zero_oracle_gap(params, drive, traj, spin0)
            tolerance = 1.0e-8 * config.tolerance_scale
            checks.append(make_check("omega_zero_oracle", "matches the exact Omega = 0 propagator", gap, tolerance))
        return provider, traj, (0, 1), {}, {}, checks

    def _evolve_fock(self, config: RunConfig, spin0: np.ndarray):
        """Lab-frame or rotating-frame run from |alpha, n0> (x) spin0"""
        params = config.params
        alpha, n0 = config.field.alpha, config.field.n0
        if config.truncation:
            trunc = config.truncation
        elif n0 == 0:
            trunc = Truncation.for_coherent(abs(alpha))
        else:
            trunc = Truncation.for_displacement(abs(alpha), n0 + 10)
        if n0 == 0:
            field0 = coherent_state(alpha, trunc)
        else:
            field0 = displacement_matrix(alpha, trunc).entries[:, n0]
        psi0 = product_state(spin0, field0)
        if abs(np.linalg.norm(psi0) - 1.0) > 1.0e-10:
            raise TruncationTooSmall(f"|alpha, {n0}> is not normalized at N={trunc.N}; raise truncation.N")

        if config.evolve.model == "quantum":
            provider = StaticHamiltonian(h_q(params, trunc).entries)
        else:

            def provider(t: float) -> np.ndarray:
                return h_q_rotating(params, t, trunc).entries

        traj = propagate(provider, psi0, config.propagation)
        checks = []
        if config.evolve.model == "quantum" and params.omega == 0 and n0 == 0:
            worst = min(
                fidelity(state, spin_conditional_displaced_evolution(params, alpha, spin0, t, trunc))
                for state, t in zip(traj.states, traj.times)
            )
            loss, tolerance = 1.0 - worst, 1.0e-7 * config.tolerance_scale
            checks.append(make_check("omega_zero_oracle", "infidelity to the analytic Omega = 0 state", loss, tolerance))
        return provider, traj, (2 * n0, 2 * n0 + 1), {}, {"truncation_N": trunc.N}, checks

    def _evolve_displaced(self, config: RunConfig, spin0: np.ndarray):
        """Coefficient dynamics on displaced levels, optionally checked against the lab and rotating frames"""
        params, cutoffs = config.params, config.cutoffs
        alpha, n0 = config.field.alpha, config.field.n0
        trunc = config.truncation or Truncation(N=n0 + 30)
        provider = DisplacedBasisHamiltonian(params, alpha, trunc, cutoffs)
        traj = displaced_coefficient_dynamics(
            params, alpha, n0, config.propagation, trunc, cutoffs, spin0, generator=provider
        )
        results: Dict[str, Any] = {
            "leakage_onset_time": leakage_onset_time(traj),
            "min_population_n0": float(np.min(traj.observables["population_n0"])),
        }
        resolved: Dict[str, Any] = {"truncation_N": trunc.N}
        checks = []
        if config.evolve.frame_check:
            if config.evolve.lab_N:
                lab_trunc = Truncation(N=config.evolve.lab_N)
            else:
                lab_trunc = Truncation.for_displacement(abs(alpha) + params.lam / params.omega0, trunc.dim)
            resolved["lab_truncation_N"] = lab_trunc.N
            worst = frame_consistency(params, alpha, n0, config.propagation, trunc, lab_trunc, cutoffs, spin0)
            results["frame_fidelities"] = worst
            tolerance = 1.0e-6 * config.tolerance_scale
            for pair, value in worst.items():
                loss = 1.0 - value
                checks.append(make_check(f"frame_{pair}", "pairwise infidelity", loss, tolerance))
        return provider, traj, (2 * n0, 2 * n0 + 1), results, resolved, checks

    def _run_compare(self, config: RunConfig) -> Dict[str, Any]:
        section, prop, params = config.compare, config.propagation, config.params
        spin0 = spin_state(section.spin)
        runs = inversion_gap_sweep(params, section.amplitude, section.lambda_sequence, prop, spin0)
        gaps = [run.max_inversion_gap for run in runs]

        # at A = 0 the gap is the vacuum coupling alone, which also shrinks with lambda
        checks = [decreasing_check("inversion_gap_decreasing", gaps)]

        rows = []
        drift_tolerance = 1.0e-8 * config.tolerance_scale
        for lam, run in zip(section.lambda_sequence, runs):
            levels = run.traj_q.states.shape[1] // 2 - 1
            drift_q, drift_sc = run.traj_q.norm_drift, run.traj_sc.norm_drift
            rows.append((lam, section.amplitude / lam, levels, run.max_inversion_gap, drift_q, drift_sc))
            drift = max(drift_q, drift_sc)
            checks.append(make_check(f"norm_drift_lambda{lam}", "norm drift", drift, drift_tolerance))

        last = runs[-1]
        trajectory_rows = list(
            zip(last.traj_q.times, last.traj_q.observables["sigma_z"], last.traj_sc.observables["sigma_z"])
        )
        gap_columns = [
            "lambda",
            "alpha_mag",
            "N",
            "max_inversion_gap",
            "norm_drift_quantum",
            "norm_drift_semiclassical",
        ]
        tables: List[Table] = [
            ("compare_gap.csv", gap_columns, rows),
            ("compare.csv", ["t", "sigma_z_quantum", "sigma_z_semiclassical"], trajectory_rows),
        ]
        results: Dict[str, Any] = {"gaps": gaps}

        if section.collapse_lambda is not None:
            collapse_prop = prop.model_copy(update={"t_end": section.collapse_t_end})
            run = compare_quantum_semiclassical(
                params.with_coupling(section.collapse_lambda), section.collapse_alpha, collapse_prop, spin0
            )
            ratio_q = collapse_ratio(run.traj_q, section.collapse_window)
            ratio_sc = collapse_ratio(run.traj_sc, section.collapse_window)
            results["collapse"] = {"quantum_ratio": ratio_q, "semiclassical_ratio": ratio_sc}
            checks.append(make_check("quantum_collapse", "late/early envelope ratio", ratio_q, 0.25, ratio_q < 0.25))
            checks.append(
                make_check("semiclassical_no_collapse", "envelope loss", 1.0 - ratio_sc, 0.1, ratio_sc >= 0.9)
            )
        return {"results": results, "checks": checks, "tables": tables}

    # ========== HELPERS ==========

    def _time_reversal_check(self, provider, traj: Trajectory, prop, tolerance_scale: float) -> Dict[str, Any]:
        end = traj.states[-1] / np.linalg.norm(traj.states[-1])
        back = propagate(reversed_hamiltonian(provider, prop.t_end), end, prop, observables={})
        loss = 1.0 - fidelity(back.states[-1], traj.states[0])
        tolerance = 1.0e-6 * tolerance_scale
        return make_check("time_reversal", "infidelity after the backward run", loss, tolerance)

    def _trajectory_table(
        self, traj: Trajectory, amplitudes: Tuple[int, int]
    ) -> Tuple[List[str], List[Sequence[Any]]]:
        names = list(traj.observables)
        columns = ["t"] + names
        for i in amplitudes:
            columns += [f"re_psi_{i}", f"im_psi_{i}"]
        rows = []
        for j, t in enumerate(traj.times):
            row: List[Any] = [t] + [traj.observables[name][j] for name in names]
            for i in amplitudes:
                row += [traj.states[j, i].real, traj.states[j, i].imag]
            rows.append(row)
        return columns, rows

    # ========== EXECUTION ==========

    def run(self, config: RunConfig) -> RunState:
        """Execute the graph for one configuration"""
        logger.info(f"[GRAPH] Starting {config.command} run")
        result = self.graph.invoke({"config": config, "phase": "start"})
        logger.info(f"[GRAPH] Run completed, phase: {result.get('phase')}")
        return result

"""
LangGraph Sweep Workflow

Walks the anisotropy grid one point at a time:
1. Evolve: converge the ground state (checkpoint, warm start or cold start)
2. Measure: optimize every requested (n, objective) in the xy/xz planes
3. Advance: hand the state on to the next grid point

Flow:
  Evolve → Measure → Advance → [Evolve while points remain] → END

Per-point failures are recorded in the state's `errors` list and as rows with
converged=false; they never abort the sweep.
"""

import logging
from typing import Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph
from tqdm import tqdm

from src.bell.optimizer import FrameOptimizer
from src.mps.checkpoint import checkpoint_path, load_or_none, save_checkpoint
from src.mps.itebd import EvolutionSchedule, ItebdEngine
from src.mps.state import MpsState, reduced_density_matrix
from src.orchestrator.records import SweepRecord
from src.utils.config_loader import SweepConfig

logger = logging.getLogger(__name__)

PIPELINE_VERSION = "1.0.0"
QUICK_RESTARTS = 8


class SweepState(TypedDict):
    """
    State carried between workflow nodes.
    """
    config: SweepConfig
    grid: List[float]
    index: int

    # Evolve output
    current_state: Optional[MpsState]
    current_converged: bool

    # Warm-start source for the next point
    previous_state: Optional[MpsState]

    # Measure output
    records: List[SweepRecord]
    reports: List[dict]

    # Error handling
    errors: List[str]
    nonconverged: List[float]


def evolve_node(state: SweepState, engine: ItebdEngine) -> SweepState:
    """
    Node 1: Ground state at the current grid point.

    A readable checkpoint for (D, delta) written with the same run fingerprint is
    reused; otherwise the engine runs, warm-started from the previous point when
    the config asks for it.
    """
    config = state['config']
    delta = state['grid'][state['index']]
    state['current_state'] = None
    state['current_converged'] = False

    try:
        path = checkpoint_path(config.checkpoint_dir, config.D, delta) if config.checkpoint_dir else None
        fingerprint = run_fingerprint(config)
        loaded = load_or_none(path, expected_run=fingerprint) if path is not None else None
        if loaded is not None:
            mps, metadata = loaded
            convergence = metadata.get("convergence", {})
            state['current_state'] = mps
            state['current_converged'] = bool(convergence.get("converged", False))
            state['reports'].append(convergence)
            logger.info(f"[SWEEP] Δ={delta:+.6f}: reusing checkpoint {path.name}")

        if state['current_state'] is None:
            initial = state['previous_state'] if config.warm_start else None
            mps, report = engine.ground_state(delta, initial_state=initial)
            state['current_state'] = mps
            state['current_converged'] = report.converged
            state['reports'].append(report.model_dump())
            if path is not None:
                save_checkpoint(mps, path, metadata={"run": fingerprint})

    except Exception as e:
        error_msg = f"Evolve error at Δ={delta}: {str(e)}"
        logger.error(f"[SWEEP] {error_msg}")
        state['errors'].append(error_msg)
        state['current_state'] = None

    if not state['current_converged']:
        state['nonconverged'].append(delta)
    return state


def measure_node(state: SweepState, optimizer: FrameOptimizer) -> SweepState:
    """
    Node 2: Bell values at the current grid point.

    Subchains shorter than config.contracted_from_n go through a dense reduced
    density matrix; longer ones use the contracted MPS path.
    """
    config = state['config']
    delta = state['grid'][state['index']]
    mps = state['current_state']

    for n in config.n_list:
        target = None
        if mps is not None:
            try:
                target = reduced_density_matrix(mps, n, config.offset) if n < config.contracted_from_n else mps
            except Exception as e:
                error_msg = f"RDM error at Δ={delta}, n={n}: {str(e)}"
                logger.error(f"[SWEEP] {error_msg}")
                state['errors'].append(error_msg)

        for objective in config.objectives:
            if target is None:
                state['records'].append(SweepRecord.failed(delta, n, objective))
                continue
            try:
                comparison = optimizer.optimize_both_planes(objective, target, n)
                record = SweepRecord.from_comparison(delta, n, objective, comparison,
                                                     converged=state['current_converged'])
                state['records'].append(record)
                logger.debug(f"[SWEEP] Δ={delta:+.6f} n={n} {objective}: {record.value_best} "
                             f"({record.winning_plane})")
            except Exception as e:
                error_msg = f"Optimizer error at Δ={delta}, n={n}, {objective}: {str(e)}"
                logger.error(f"[SWEEP] {error_msg}")
                state['errors'].append(error_msg)
                state['records'].append(SweepRecord.failed(delta, n, objective))

    return state


def advance_node(state: SweepState, progress: Optional[tqdm] = None) -> SweepState:
    """Node 3: Keep the last good state for warm starts and move to the next point."""
    if state['current_state'] is not None:
        state['previous_state'] = state['current_state']
    state['current_state'] = None
    state['index'] += 1
    if progress is not None:
        progress.update(1)
    return state


def has_next_point(state: SweepState) -> str:
    """
    Conditional edge logic.

    Returns:
        "evolve" while grid points remain, END otherwise
    """
    if state['index'] < len(state['grid']):
        return "evolve"
    return END


def resolve_schedule(config: SweepConfig) -> EvolutionSchedule:
    if config.schedule is not None:
        return EvolutionSchedule.from_tuples(config.schedule)
    if config.quick:
        return EvolutionSchedule.quick()
    return EvolutionSchedule.default()


def run_fingerprint(config: SweepConfig) -> Dict[str, object]:
    """Everything besides (D, delta) that decides which state a run converges to."""
    return {
        "D": config.D,
        "seed": config.seed,
        "warm_start": config.warm_start,
        "quick": config.quick,
        "schedule": [[s.tau, s.max_steps, s.energy_tolerance] for s in resolve_schedule(config).stages],
    }


def build_engine(config: SweepConfig) -> ItebdEngine:
    return ItebdEngine(D=config.D, schedule=resolve_schedule(config), seed=config.seed)


def build_optimizer(config: SweepConfig) -> FrameOptimizer:
    restarts = config.restarts
    if restarts is None and config.quick:
        restarts = QUICK_RESTARTS
    return FrameOptimizer(restarts=restarts, seed=config.seed, offset=config.offset)


def build_workflow(engine: ItebdEngine, optimizer: FrameOptimizer, progress: Optional[tqdm] = None):
    """
    Build and compile the sweep graph.

    Args:
        engine: iTEBD engine used at every grid point
        optimizer: frame optimizer used for every (n, objective)
        progress: optional tqdm bar advanced once per grid point

    Returns:
        Compiled graph ready for execution
    """
    workflow = StateGraph(SweepState)

    workflow.add_node("evolve", lambda state: evolve_node(state, engine))
    workflow.add_node("measure", lambda state: measure_node(state, optimizer))
    workflow.add_node("advance", lambda state: advance_node(state, progress))

    workflow.add_edge("evolve", "measure")
    workflow.add_edge("measure", "advance")
    workflow.add_conditional_edges(
        "advance",
        has_next_point,
        {
            "evolve": "evolve",
            END: END
        }
    )

    workflow.set_entry_point("evolve")
    return workflow.compile()


def initial_state(config: SweepConfig) -> SweepState:
    return {
        "config": config,
        "grid": config.resolved_grid(),
        "index": 0,
        "current_state": None,
        "current_converged": False,
        "previous_state": None,
        "records": [],
        "reports": [],
        "errors": [],
        "nonconverged": [],
    }


def run_sweep_workflow(config: SweepConfig, engine: Optional[ItebdEngine] = None,
                       optimizer: Optional[FrameOptimizer] = None) -> SweepState:
    """
    Execute the sweep and return the final workflow state.

    Args:
        config: resolved sweep configuration
        engine: iTEBD engine (built from config if None)
        optimizer: frame optimizer (built from config if None)

    Returns:
        Final state: records in grid order, convergence reports, errors and the
        grid points that did not converge

    Example:
        config = load_sweep_config("quick_sweep")
        result = run_sweep_workflow(config)
        write_csv(result['records'], config.output_path, sweep_provenance(config))
    """
    engine = engine or build_engine(config)
    optimizer = optimizer or build_optimizer(config)
    state = initial_state(config)
    grid = state['grid']

    logger.info(f"[SWEEP] {config.name}: {len(grid)} grid points, n={config.n_list}, "
                f"objectives={config.objectives}, D={config.D}, "
                f"{'warm' if config.warm_start else 'cold'} start")

    with tqdm(total=len(grid), desc="Δ sweep", unit="pt") as progress:
        app = build_workflow(engine, optimizer, progress)
        final_state = app.invoke(state, config={"recursion_limit": 3 * len(grid) + 10})

    if final_state['errors']:
        logger.warning(f"[SWEEP] Finished with {len(final_state['errors'])} errors")
    if final_state['nonconverged']:
        logger.warning(f"[SWEEP] {len(final_state['nonconverged'])} grid points did not converge")
    logger.info(f"[SWEEP] {len(final_state['records'])} records")
    return final_state


def run_sweep(config: SweepConfig) -> List[SweepRecord]:
    """Records of a full sweep, in grid order."""
    return run_sweep_workflow(config)['records']


def sweep_provenance(config: SweepConfig) -> Dict[str, str]:
    """CSV comment header: resolved config, code version and how values were obtained."""
    return {
        "version": PIPELINE_VERSION,
        "config": config.model_dump_json(),
        "offset": config.offset,
        "planes": "value_xy and value_xz are plane-restricted optima; value_full only for n <= 4",
        "reference": "closed-form energies at delta 0 and 1, exact diagonalization elsewhere",
    }

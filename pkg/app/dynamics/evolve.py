"""
Self-consistent time evolution

Each step from t to t + dt:
  1. spatial derivatives and H, U from the modes at t and the current d_t phi estimate
  2. amplitude step with renormalization
  3. coupling weights at t + dt and a mode solve at t + dt
  4. d_t phi = (phi(t + dt) - phi(t)) / dt
and 1-4 repeat at fixed t until d_t phi settles. The settled estimate seeds the next step.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Literal, Optional, Protocol, Tuple

import numpy as np

from app.basis.coefficients import FragBasis, check_boson_count
from app.core.errors import ConfigError, DivergedStepError
from app.core.logging import LatencyLogger, get_logger
from app.dynamics.amplitudes import (
    AmplitudeVector,
    MatrixSource,
    initial_state,
    step_euler,
    step_map,
    step_rk4,
)
from app.dynamics.densities import MatrixPair, ModePair, assemble_matrices, integrals
from app.dynamics.gpe import (
    ChemicalPotentialMatrix,
    GPESolver,
    coupling_weights,
    energy_from_integrals,
)
from app.observables.correlation import density, g1, n2
from app.trap.eigenmodes import single_particle_modes
from app.trap.grid import Grid, Scheme
from app.trap.potential import TrapSpec, potential_on_grid

logger = get_logger(__name__)

Integrator = Literal["euler", "rk4"]

BRANCH_JUMP = 100.0


@dataclass(frozen=True)
class SimConfig:
    """Run parameters in oscillator units"""

    n_bosons: int
    total_time: float
    dt: float
    grid: Grid
    trap: TrapSpec = field(default_factory=TrapSpec)
    g: float = 0.0
    integrator: Integrator = "euler"
    derivative: Scheme = "centered"
    inner_tol: float = 1e-8
    inner_max_iterations: int = 20
    gpe_tol: float = 1e-8
    gpe_max_iterations: int = 2000
    descent_step: float = 1.0
    freeze_modes: bool = False
    gauge_flip_step: Optional[int] = None
    every: int = 1
    snapshot_every: int = 0
    emit_g1: bool = False
    checkpoint_every: int = 0
    record_pathways: bool = False
    label: str = "run"

    def __post_init__(self) -> None:
        violations = []
        try:
            check_boson_count(self.n_bosons)
        except IndexError:
            violations.append({"loc": "n_bosons", "msg": "N must be even and at least 2"})
        if not self.dt > 0:
            violations.append({"loc": "dt", "msg": "dt must be positive"})
        elif abs(self.total_time / self.dt - round(self.total_time / self.dt)) > 1e-9 * max(
            1.0, self.total_time / self.dt
        ):
            violations.append({"loc": "total_time", "msg": "T/dt must be an integer"})
        if self.integrator not in ("euler", "rk4"):
            violations.append({"loc": "integrator", "msg": "integrator must be euler or rk4"})
        if self.every < 1 or self.inner_max_iterations < 1:
            violations.append({"loc": "every", "msg": "cadences and caps must be positive"})
        if violations:
            raise ConfigError("Invalid simulation configuration", details={"violations": violations})

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))

    @property
    def basis(self) -> FragBasis:
        return FragBasis(self.n_bosons)

    def time(self, step: int) -> float:
        return step * self.dt

    def potential(self, step: int) -> np.ndarray:
        return potential_on_grid(self.trap, self.grid, self.time(step))

    def solver(self, step: int) -> GPESolver:
        return GPESolver(
            self.grid,
            self.potential(step),
            self.g,
            tol=self.gpe_tol,
            max_iterations=self.gpe_max_iterations,
            descent_step=self.descent_step,
        )


@dataclass(frozen=True)
class StepDiagnostics:
    inner_iterations: int = 0
    inner_history: Tuple[float, ...] = ()
    gpe_residual: float = 0.0
    norm_residual: float = 0.0


@dataclass(frozen=True)
class PathwayMaps:
    """Products of step maps over the first and second half of the run"""

    first: np.ndarray
    second: np.ndarray


@dataclass(frozen=True)
class SimState:
    step: int
    amplitudes: AmplitudeVector
    modes: ModePair
    mu: ChemicalPotentialMatrix
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)
    gauge_flipped: bool = False
    pathways: Optional[PathwayMaps] = None

    @property
    def t(self) -> float:
        return self.modes.t


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    n2: float
    energy: float
    chemical_potential: float
    inner_iterations: int
    norm_residual: float
    x12: complex
    probabilities: np.ndarray


class RunSink(Protocol):
    def record(self, state: SimState, record: StepRecord) -> None: ...

    def snapshot(self, state: SimState, fields: Dict[str, np.ndarray]) -> None: ...

    def checkpoint(self, state: SimState) -> None: ...


class NullSink:
    def record(self, state: SimState, record: StepRecord) -> None:
        pass

    def snapshot(self, state: SimState, fields: Dict[str, np.ndarray]) -> None:
        pass

    def checkpoint(self, state: SimState) -> None:
        pass


class RecordingSink(NullSink):
    """Keeps every record in memory"""

    def __init__(self) -> None:
        self.records: List[StepRecord] = []
        self.snapshots: List[Tuple[int, Dict[str, np.ndarray]]] = []

    def record(self, state: SimState, record: StepRecord) -> None:
        self.records.append(record)

    def snapshot(self, state: SimState, fields: Dict[str, np.ndarray]) -> None:
        self.snapshots.append((state.step, fields))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class MemoryEstimate:
    simultaneous: int
    trajectory: int


def memory_counts(n_bosons: int, n_space: int, n_time: int) -> MemoryEstimate:
    return MemoryEstimate(
        simultaneous=2 * (n_bosons + 5 + 10 * n_space),
        trajectory=n_time * (n_bosons + 1 + 2 * n_space) + 4 * n_time,
    )


def memory_estimate(config: SimConfig) -> MemoryEstimate:
    return memory_counts(config.n_bosons, config.grid.size, config.n_steps)


def inner_converged(prev: np.ndarray, new: np.ndarray, grid: Grid, tol: float) -> bool:
    return inner_change(prev, new, grid) < tol


def inner_change(prev: np.ndarray, new: np.ndarray, grid: Grid) -> float:
    """max_i ||new_i - prev_i|| over the modes"""
    return max(grid.norm(new[i] - prev[i]) for i in range(new.shape[0]))


def observe(config: SimConfig, state: SimState) -> StepRecord:
    weights = coupling_weights(state.amplitudes)
    values = integrals(state.modes, config.potential(state.step), config.g)
    return StepRecord(
        step=state.step,
        t=state.t,
        n2=n2(state.amplitudes),
        energy=energy_from_integrals(weights, values),
        chemical_potential=state.mu.trace,
        inner_iterations=state.diagnostics.inner_iterations,
        norm_residual=state.diagnostics.norm_residual,
        x12=complex(weights.X[0, 1]),
        probabilities=state.amplitudes.probabilities,
    )


def initial_sim_state(config: SimConfig) -> SimState:
    """All bosons in mode 1, modes from the t=0 mode solve seeded by single-particle eigenmodes"""
    amplitudes = initial_state(config.n_bosons)
    seed = single_particle_modes(config.trap, config.grid, 0.0, 2).modes.astype(np.complex128)
    solution = config.solver(0).solve(coupling_weights(amplitudes), seed)
    modes = ModePair(
        grid=config.grid,
        phi=solution.phi,
        dphi_dt=np.zeros_like(solution.phi),
        t=0.0,
        scheme=config.derivative,
    )
    pathways = None
    if config.record_pathways:
        identity = np.eye(config.n_bosons + 1, dtype=np.complex128)
        pathways = PathwayMaps(first=identity, second=identity.copy())
    logger.info(
        "evolve.initialized",
        n_bosons=config.n_bosons,
        mu=solution.mu.trace,
        path=solution.path,
        gpe_iterations=solution.iterations,
    )
    return SimState(
        step=0,
        amplitudes=amplitudes,
        modes=modes,
        mu=solution.mu,
        diagnostics=StepDiagnostics(gpe_residual=solution.residual),
        pathways=pathways,
    )


def flip_gauge(state: SimState) -> SimState:
    """phi_2 -> -phi_2 with b_k -> (-1)^{N/2+k} b_k; the physical state is unchanged"""
    phi = state.modes.phi.copy()
    dphi = state.modes.time_derivative.copy()
    phi[1] *= -1
    dphi[1] *= -1
    n = state.amplitudes.n_bosons
    parity = (-1.0) ** np.arange(n + 1)  # N/2 + k runs 0..N
    amplitudes = replace(state.amplitudes, b=state.amplitudes.b * parity)
    mu = state.mu.mu * np.array([[1, -1], [-1, 1]])
    return replace(
        state,
        amplitudes=amplitudes,
        modes=state.modes.replace(phi=phi, dphi_dt=dphi),
        mu=ChemicalPotentialMatrix(mu=mu),
        gauge_flipped=True,
    )


def _interpolated(now: MatrixPair, later: MatrixPair, t: float, dt: float) -> Tuple[MatrixSource, MatrixSource]:
    def h(s: float):
        return now.H + ((s - t) / dt) * (later.H - now.H)

    def u(s: float):
        return now.U + ((s - t) / dt) * (later.U - now.U)

    return h, u


class Evolver:
    """Owns the per-step work for one configuration"""

    def __init__(self, config: SimConfig):
        self.config = config
        self.basis = config.basis
        self._frozen: Optional[MatrixPair] = None

    def _amplitude_step(
        self, state: SimState, h: MatrixSource, u: MatrixSource
    ) -> AmplitudeVector:
        cfg = self.config
        # stamp times from the step index so resumed runs see identical arguments
        start = replace(state.amplitudes, t=cfg.time(state.step))
        if cfg.integrator == "rk4":
            stepped = step_rk4(start, h, u, cfg.dt)
        else:
            stepped = step_euler(start, h, u, cfg.dt)  # type: ignore[arg-type]
        return replace(stepped, t=cfg.time(state.step + 1))

    def _accumulate(self, state: SimState, h: MatrixSource, u: MatrixSource, scale: float) -> Optional[PathwayMaps]:
        if state.pathways is None:
            return None
        cfg = self.config
        step_matrix = step_map(h, u, cfg.time(state.step), cfg.dt, cfg.integrator) / scale
        if state.step < cfg.n_steps // 2:
            return PathwayMaps(first=step_matrix @ state.pathways.first, second=state.pathways.second)
        return PathwayMaps(first=state.pathways.first, second=step_matrix @ state.pathways.second)

    def advance(self, state: SimState) -> SimState:
        cfg = self.config
        if cfg.gauge_flip_step is not None and state.step == cfg.gauge_flip_step and not state.gauge_flipped:
            state = flip_gauge(state)
            self._frozen = None
            logger.info("evolve.gauge_flipped", step=state.step)
        if cfg.freeze_modes:
            return self._advance_frozen(state)
        return self._advance_coupled(state)

    def _advance_frozen(self, state: SimState) -> SimState:
        cfg = self.config
        if self._frozen is None:
            self._frozen = assemble_matrices(
                state.modes.replace(dphi_dt=np.zeros_like(state.modes.phi)),
                self.basis,
                cfg.potential(state.step),
                cfg.g,
            )
        amplitudes = self._amplitude_step(state, self._frozen.H, self._frozen.U)
        return SimState(
            step=state.step + 1,
            amplitudes=amplitudes,
            modes=state.modes.replace(t=cfg.time(state.step + 1)),
            mu=state.mu,
            diagnostics=StepDiagnostics(
                inner_iterations=1, norm_residual=abs(amplitudes.pre_norm - 1.0)
            ),
            gauge_flipped=state.gauge_flipped,
            pathways=self._accumulate(state, self._frozen.H, self._frozen.U, amplitudes.pre_norm),
        )

    def _advance_coupled(self, state: SimState) -> SimState:
        cfg = self.config
        t, t_next = cfg.time(state.step), cfg.time(state.step + 1)
        v_now = cfg.potential(state.step)
        v_next = cfg.potential(state.step + 1)
        solver = cfg.solver(state.step + 1)

        phi = state.modes.phi
        dphi = state.modes.time_derivative
        phi_next = phi
        later: Optional[MatrixPair] = None
        history: List[float] = []

        for _ in range(cfg.inner_max_iterations):
            now = assemble_matrices(state.modes.replace(dphi_dt=dphi), self.basis, v_now, cfg.g)
            if cfg.integrator == "rk4" and later is not None:
                h_src, u_src = _interpolated(now, later, t, cfg.dt)
            else:
                h_src, u_src = now.H, now.U
            amplitudes = self._amplitude_step(state, h_src, u_src)
            solution = solver.solve(coupling_weights(amplitudes), phi_next, reference=phi)
            new_phi = solution.phi
            new_dphi = (new_phi - phi) / cfg.dt
            change = inner_change(dphi, new_dphi, cfg.grid)
            history.append(change)
            phi_next, dphi = new_phi, new_dphi
            if cfg.integrator == "rk4":
                later = assemble_matrices(
                    ModePair(cfg.grid, new_phi, new_dphi, t_next, cfg.derivative),
                    self.basis,
                    v_next,
                    cfg.g,
                )
            if change < cfg.inner_tol:
                break
        else:
            raise DivergedStepError(
                "Time-derivative iteration did not converge",
                details={
                    "t": t,
                    "step": state.step,
                    "inner_history": history,
                    "tol": cfg.inner_tol,
                },
            )

        jump = abs(solution.mu.trace - state.mu.trace)
        if jump > BRANCH_JUMP * cfg.dt * max(1.0, abs(state.mu.trace)):
            logger.warning(
                "gpe.branch_jump", t=t_next, mu_before=state.mu.trace, mu_after=solution.mu.trace
            )

        return SimState(
            step=state.step + 1,
            amplitudes=amplitudes,
            modes=ModePair(cfg.grid, phi_next, dphi, t_next, cfg.derivative),
            mu=solution.mu,
            diagnostics=StepDiagnostics(
                inner_iterations=len(history),
                inner_history=tuple(history),
                gpe_residual=solution.residual,
                norm_residual=abs(amplitudes.pre_norm - 1.0),
            ),
            gauge_flipped=state.gauge_flipped,
            pathways=self._accumulate(state, h_src, u_src, amplitudes.pre_norm),
        )


def _emit(config: SimConfig, state: SimState, sink: RunSink, final: bool) -> None:
    if state.step % config.every == 0 or final:
        sink.record(state, observe(config, state))
    if config.snapshot_every and state.step % config.snapshot_every == 0:
        fields = {"modes": state.modes.phi, "density": density(state.amplitudes, state.modes)}
        if config.emit_g1:
            fields["g1"] = g1(state.amplitudes, state.modes).values
        sink.snapshot(state, fields)
    if config.checkpoint_every and state.step % config.checkpoint_every == 0 and state.step > 0:
        sink.checkpoint(state)


def run(
    config: SimConfig,
    sink: Optional[RunSink] = None,
    initial: Optional[SimState] = None,
    stop_step: Optional[int] = None,
    on_step: Optional[Callable[[SimState], None]] = None,
) -> SimState:
    """Evolve to T (or `stop_step`), from `initial` when resuming"""
    sink = sink or NullSink()
    last = config.n_steps if stop_step is None else min(stop_step, config.n_steps)
    evolver = Evolver(config)

    with LatencyLogger("evolve.run", logger, label=config.label, steps=last):
        if initial is None:
            state = initial_sim_state(config)
            _emit(config, state, sink, final=last == 0)
        else:
            state = initial
        while state.step < last:
            state = evolver.advance(state)
            _emit(config, state, sink, final=state.step == last)
            if on_step is not None:
                on_step(state)
    logger.info(
        "evolve.finished",
        step=state.step,
        t=state.t,
        n2=n2(state.amplitudes),
        mu=state.mu.trace,
    )
    return state


def checkpoint_payload(state: SimState) -> Dict[str, np.ndarray]:
    payload = {
        "step": np.array(state.step),
        "t": np.array(state.t),
        "b": state.amplitudes.b,
        "pre_norm": np.array(state.amplitudes.pre_norm),
        "phi": state.modes.phi,
        "dphi_dt": state.modes.time_derivative,
        "mu": state.mu.mu,
        "gauge_flipped": np.array(state.gauge_flipped),
    }
    if state.pathways is not None:
        payload["pathways_first"] = state.pathways.first
        payload["pathways_second"] = state.pathways.second
    return payload


def restore_state(config: SimConfig, payload: Dict[str, np.ndarray]) -> SimState:
    phi = np.asarray(payload["phi"])
    config.grid.check_field(phi, "phi")
    if len(payload["b"]) != config.n_bosons + 1:
        raise ConfigError(
            "Checkpoint boson count differs from the configuration",
            details={"violations": [{"loc": "n_bosons", "msg": "checkpoint mismatch"}]},
        )
    t = float(payload["t"])
    pathways = None
    if "pathways_first" in payload:
        pathways = PathwayMaps(first=payload["pathways_first"], second=payload["pathways_second"])
    return SimState(
        step=int(payload["step"]),
        amplitudes=AmplitudeVector(np.asarray(payload["b"]), t, float(payload["pre_norm"])),
        modes=ModePair(config.grid, phi, np.asarray(payload["dphi_dt"]), t, config.derivative),
        mu=ChemicalPotentialMatrix(mu=np.asarray(payload["mu"])),
        gauge_flipped=bool(payload["gauge_flipped"]),
        pathways=pathways,
    )

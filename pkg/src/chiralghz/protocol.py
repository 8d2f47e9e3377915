"""GHZ-generation schedules: construction, validation, execution.

The chain construction alternates quarter-turn coupling windows with bit
flips.  A register prepared as (|0> + |1>) x |1> x |0...0> and run through a
window on qubits (a, b, c) maps its two branches onto (|100> + |011>)-type
components because single excitations and single holes circulate in opposite
senses; flipping the consumed chain-end qubit (and seeding the next one)
extends the entangled block by two qubits per round.

Window phases are (0, -pi/2, 0): the quarter turn sits on the (b, c) leg and
the (c, a) leg stays real so a frequency-degenerate outer pair still has a
lab-frame realization.  The flux must be -pi/2 -- the sense that moves an
excitation b -> a -- and with this gauge both branches acquire the same -i
transfer phase, which keeps the superposition exactly in step with the
target states (flux +pi/2, or a quarter turn placed on the (a, b) leg,
provably does not).
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    IntegratorSettings,
    TrajectoryBatch,
    _LindbladKernel,
    evolve_static,
)
from .errors import AccuracyError, ScheduleError
from .hamiltonian import HamiltonianMatrix, LoopWindow, SystemConfig, effective_hamiltonian
from .loop3 import circulation_period
from .states import (
    DensityMatrix,
    PulseEvent,
    StateVector,
    apply_cnot,
    apply_pulse,
    cnot_unitary,
    embed_single_qubit,
    fidelity,
    ghz_target,
    make_basis_state,
    _single_qubit_unitary,
)

GHZ_WINDOW_PHASES = (0.0, -math.pi / 2.0, 0.0)


@dataclass(frozen=True)
class CnotEvent:
    """An instantaneous CNOT (used by the even-register Bell prefix)."""

    time: float
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target or min(self.control, self.target) < 1:
            raise ValueError("control and target must be distinct 1-based qubits")


@dataclass(frozen=True)
class Checkpoint:
    """An expected intermediate state, checked before or after boundary pulses."""

    time: float
    when: str  # "before-pulses" | "after-pulses"
    expected: StateVector
    description: str


@dataclass(frozen=True)
class Schedule:
    """An executable protocol: pulses, CNOTs, coupling windows, checkpoints."""

    n_qubits: int
    pulses: tuple
    windows: tuple
    cnots: tuple = ()
    duration: float = None
    checkpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        object.__setattr__(self, "windows", tuple(self.windows))
        object.__setattr__(self, "cnots", tuple(self.cnots))
        object.__setattr__(self, "checkpoints", tuple(self.checkpoints))
        if self.duration is None:
            ends = [w.end for w in self.windows]
            ends += [p.time for p in self.pulses] + [c.time for c in self.cnots]
            object.__setattr__(self, "duration", max(ends, default=0.0))
        self._validate()

    def _validate(self):
        n = self.n_qubits
        for p in self.pulses:
            if p.qubit > n:
                raise ScheduleError(f"pulse on qubit {p.qubit} outside 1..{n}")
        for c in self.cnots:
            if max(c.control, c.target) > n:
                raise ScheduleError(f"cnot {c.control}->{c.target} outside 1..{n}")
        for w in self.windows:
            if max(w.qubits) > n:
                raise ScheduleError(f"window on {w.qubits} outside 1..{n}")
        for i, wa in enumerate(self.windows):
            for wb in self.windows[i + 1 :]:
                shared = set(wa.qubits) & set(wb.qubits)
                if shared and wa.start < wb.end and wb.start < wa.end:
                    q = min(shared)
                    raise ScheduleError(
                        f"windows at t={wa.start:g} and t={wb.start:g} overlap "
                        f"on shared qubit {q}"
                    )
        for p in self.pulses:
            for w in self.windows:
                if p.qubit in w.qubits and w.start < p.time < w.end:
                    raise ScheduleError(
                        f"pulse on qubit {p.qubit} at t={p.time:g} falls inside "
                        f"the window on {w.qubits} ({w.start:g}..{w.end:g})"
                    )
        for c in self.cnots:
            for w in self.windows:
                if {c.control, c.target} & set(w.qubits) and w.start < c.time < w.end:
                    raise ScheduleError(
                        f"cnot at t={c.time:g} falls inside the window on {w.qubits}"
                    )

    @property
    def pi_pulse_count(self):
        return sum(1 for p in self.pulses if p.kind == "flip-x")

    @property
    def half_pi_pulse_count(self):
        return sum(
            1 for p in self.pulses if p.kind == "rotation" and abs(p.angle - math.pi / 2) < 1e-12
        )


@dataclass(frozen=True)
class CheckpointTranscript:
    """(time, description, expected state, achieved fidelity) records."""

    entries: tuple

    def fidelities(self):
        return [e[3] for e in self.entries]


@dataclass(frozen=True)
class CheckpointReport:
    passed: bool
    total: int
    failures: tuple  # (time, description, fidelity)


def _superposition(n, ones_a, ones_b):
    """(|a> + |b>)/sqrt(2) with each component given by its set of 1-bits."""
    amps = np.zeros(2**n, dtype=complex)
    for ones in (ones_a, ones_b):
        idx = 0
        for q in ones:
            idx |= 1 << (n - q)
        amps[idx] += 1.0 / math.sqrt(2.0)
    return StateVector(n, amps)


def _ghz_checkpoints(n, swap_time):
    """The expected-state ladder of the GHZ chain (both parities)."""
    points = []
    if n % 2 == 1:
        points.append(
            Checkpoint(0.0, "after-pulses", _superposition(n, {2}, {1, 2}), "seeded superposition")
        )
        rounds = (n - 1) // 2
        for k in range(rounds):
            t = (k + 1) * swap_time
            occupied = 2 * k + 1  # excitation parks here after window k
            span = 2 * k + 3
            before = _superposition(
                n, {occupied}, set(range(1, span + 1)) - {occupied}
            )
            points.append(Checkpoint(t, "before-pulses", before, f"window {k + 1} output"))
            after_a = set() if span + 1 > n else {span + 1}
            after_b = set(range(1, min(span + 1, n) + 1))
            points.append(
                Checkpoint(t, "after-pulses", _superposition(n, after_a, after_b),
                           f"chain extended to {min(span + 1, n)} qubits" if span < n
                           else "final GHZ state")
            )
    else:
        seed = {3} if n >= 4 else set()
        points.append(
            Checkpoint(0.0, "after-pulses",
                       _superposition(n, seed, {1, 2} | seed), "Bell pair seeded")
        )
        rounds = (n - 2) // 2
        for k in range(rounds):
            t = (k + 1) * swap_time
            occupied = 2 * k + 2
            span = 2 * k + 4
            before = _superposition(
                n, {occupied}, set(range(1, span + 1)) - {occupied}
            )
            points.append(Checkpoint(t, "before-pulses", before, f"window {k + 1} output"))
            after_a = set() if span + 1 > n else {span + 1}
            after_b = set(range(1, min(span + 1, n) + 1))
            points.append(
                Checkpoint(t, "after-pulses", _superposition(n, after_a, after_b),
                           f"chain extended to {min(span + 1, n)} qubits" if span < n
                           else "final GHZ state")
            )
    return tuple(points)


def build_ghz_schedule(n, g0):
    """Schedule preparing an n-qubit GHZ state with coupling strength g0.

    Odd n: a pi/2 pulse on Q1 plus a flip of Q2 seed the chain; each round k
    runs a window on (2k+1, 2k+2, 2k+3) for one swap time and then flips the
    consumed qubit 2k+1 and (when present) the next seed qubit 2k+4.  Even n
    starts from a Bell pair on (Q1, Q2) via pi/2 + CNOT, flips Q3, and runs
    the same two-qubits-per-round chain through windows (2k+2, 2k+3, 2k+4).
    n = 2 is the bare Bell prefix.
    """
    if n < 2:
        raise ValueError("GHZ schedules need n >= 2")
    swap = circulation_period(g0).swap_time
    pulses = []
    windows = []
    cnots = []
    if n % 2 == 1:
        pulses.append(PulseEvent(0.0, 1, math.pi / 2, math.pi / 2, "rotation"))
        pulses.append(PulseEvent(0.0, 2, math.pi, 0.0, "flip-x"))
        for k in range((n - 1) // 2):
            windows.append(
                LoopWindow((2 * k + 1, 2 * k + 2, 2 * k + 3), k * swap, swap,
                           GHZ_WINDOW_PHASES, g0_override=g0)
            )
            t = (k + 1) * swap
            pulses.append(PulseEvent(t, 2 * k + 1, math.pi, 0.0, "flip-x"))
            if 2 * k + 4 <= n:
                pulses.append(PulseEvent(t, 2 * k + 4, math.pi, 0.0, "flip-x"))
    else:
        pulses.append(PulseEvent(0.0, 1, math.pi / 2, math.pi / 2, "rotation"))
        cnots.append(CnotEvent(0.0, 1, 2))
        if n >= 4:
            pulses.append(PulseEvent(0.0, 3, math.pi, 0.0, "flip-x"))
        for k in range((n - 2) // 2):
            windows.append(
                LoopWindow((2 * k + 2, 2 * k + 3, 2 * k + 4), k * swap, swap,
                           GHZ_WINDOW_PHASES, g0_override=g0)
            )
            t = (k + 1) * swap
            pulses.append(PulseEvent(t, 2 * k + 2, math.pi, 0.0, "flip-x"))
            if 2 * k + 5 <= n:
                pulses.append(PulseEvent(t, 2 * k + 5, math.pi, 0.0, "flip-x"))
    return Schedule(
        n_qubits=n,
        pulses=tuple(pulses),
        windows=tuple(windows),
        cnots=tuple(cnots),
        duration=len(windows) * swap,
        checkpoints=_ghz_checkpoints(n, swap),
    )


def _exec_config(schedule):
    g0 = next((w.g0_override for w in schedule.windows if w.g0_override), 1.0)
    return SystemConfig.uniform(schedule.n_qubits, g0=g0)


def _boundaries(schedule):
    times = {0.0, schedule.duration}
    for w in schedule.windows:
        times.update((w.start, w.end))
    times.update(p.time for p in schedule.pulses)
    times.update(c.time for c in schedule.cnots)
    return sorted(times)


def _events_at(schedule, t):
    """Pulses and CNOTs firing at time t, in schedule order, pulses first."""
    eps = 1e-9
    events = [("pulse", p) for p in schedule.pulses if abs(p.time - t) < eps]
    events += [("cnot", c) for c in schedule.cnots if abs(c.time - t) < eps]
    return events


def _segment_hamiltonian(schedule, config, t_a, t_b):
    """Sum of the effective Hamiltonians of the windows covering [t_a, t_b]."""
    eps = 1e-9
    active = [
        w for w in schedule.windows if w.start <= t_a + eps and w.end >= t_b - eps
    ]
    if not active:
        return None
    m = sum(effective_hamiltonian(config, w).matrix for w in active)
    return HamiltonianMatrix(schedule.n_qubits, m, excitation_conserving=True)


def execute_ideal(schedule, record_checkpoints=True):
    """Run a schedule with exact pulses and exact window propagators.

    Returns the final state and a transcript of checkpoint fidelities (the
    schedule's expected-state ladder when present, otherwise fidelity to the
    GHZ target at every boundary).
    """
    n = schedule.n_qubits
    config = _exec_config(schedule)
    state = make_basis_state(n, "0" * n)
    entries = []
    target = ghz_target(n) if n >= 2 else None

    def record(t, when):
        if not record_checkpoints:
            return
        if schedule.checkpoints:
            for cp in schedule.checkpoints:
                if abs(cp.time - t) < 1e-9 and cp.when == when:
                    entries.append((t, cp.description, cp.expected, fidelity(state, cp.expected)))
        elif when == "after-pulses" and target is not None:
            entries.append((t, "ghz-target", target, fidelity(state, target)))

    bounds = _boundaries(schedule)
    for i, t in enumerate(bounds):
        record(t, "before-pulses")
        for kind, ev in _events_at(schedule, t):
            if kind == "pulse":
                state = apply_pulse(state, ev)
            else:
                state = apply_cnot(state, ev.control, ev.target)
        record(t, "after-pulses")
        if i + 1 < len(bounds):
            t_next = bounds[i + 1]
            h = _segment_hamiltonian(schedule, config, t, t_next)
            if h is not None:
                state = evolve_static(state, h, t_next - t)
    return state, CheckpointTranscript(tuple(entries))


def execute_noisy(schedule, noise, settings=None):
    """Run a schedule under the master equation; pulses stay instantaneous.

    Returns the final density matrix and its fidelity to the GHZ target.
    """
    n = schedule.n_qubits
    if noise.n_qubits != n:
        raise ValueError("noise rates do not match the register size")
    settings = settings or IntegratorSettings()
    config = _exec_config(schedule)
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    bounds = _boundaries(schedule)
    for i, t in enumerate(bounds):
        for kind, ev in _events_at(schedule, t):
            if kind == "pulse":
                u = embed_single_qubit(_single_qubit_unitary(ev), n, ev.qubit)
            else:
                u = cnot_unitary(n, ev.control, ev.target)
            rho = u @ rho @ u.conj().T
        if i + 1 < len(bounds):
            t_next = bounds[i + 1]
            h = _segment_hamiltonian(schedule, config, t, t_next)
            h_matrix = h.matrix if h is not None else np.zeros((dim, dim), complex)
            if h is None and noise.silent:
                continue
            seg = t_next - t
            step = settings.step if settings.step is not None else seg / 2000
            kernel = _LindbladKernel(h_matrix, n, noise)
            coarse = kernel.integrate(rho.copy(), seg, step)
            if settings.halving_check:
                rho = kernel.integrate(rho, seg, 0.5 * step)
                drift = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(coarse - rho))))
                if drift > settings.tolerance:
                    raise AccuracyError(
                        f"step-halving check failed in segment {t:g}..{t_next:g}: "
                        f"trace distance {drift:.3e}",
                        drift=drift,
                    )
            else:
                rho = coarse
    result = DensityMatrix(n, rho)
    return result, fidelity(result, ghz_target(n))


def execute_trajectories(schedule, noise, settings=None, n_traj=2000, seed=0):
    """Run a schedule with the Monte-Carlo wavefunction oracle.

    Same segmentation as `execute_noisy`; each trajectory keeps its own
    random stream across all segments.  Returns the averaged density matrix
    and its GHZ fidelity.
    """
    n = schedule.n_qubits
    if n_traj < 100:
        raise ValueError("need at least 100 trajectories")
    settings = settings or IntegratorSettings()
    config = _exec_config(schedule)
    batch = TrajectoryBatch(make_basis_state(n, "0" * n), noise, n_traj, seed)
    bounds = _boundaries(schedule)
    for i, t in enumerate(bounds):
        for kind, ev in _events_at(schedule, t):
            if kind == "pulse":
                u = embed_single_qubit(_single_qubit_unitary(ev), n, ev.qubit)
            else:
                u = cnot_unitary(n, ev.control, ev.target)
            batch.apply_unitary(u)
        if i + 1 < len(bounds):
            t_next = bounds[i + 1]
            h = _segment_hamiltonian(schedule, config, t, t_next)
            h_matrix = h.matrix if h is not None else np.zeros((2**n, 2**n), complex)
            if h is None and noise.silent:
                continue
            seg = t_next - t
            step = settings.step if settings.step is not None else seg / 2000
            batch.evolve(h_matrix, seg, step)
    rho = batch.density_matrix()
    return rho, fidelity(rho, ghz_target(n))


def verify_checkpoints(transcript, tolerance):
    """Pass iff every checkpoint fidelity reaches 1 - tolerance."""
    if not transcript.entries:
        raise ValueError("transcript is empty")
    failures = tuple(
        (t, desc, fid) for (t, desc, _exp, fid) in transcript.entries
        if fid < 1.0 - tolerance
    )
    return CheckpointReport(passed=not failures, total=len(transcript.entries), failures=failures)

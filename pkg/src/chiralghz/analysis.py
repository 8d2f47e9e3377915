"""Data products: circulation traces, GHZ fidelity tables, frame-comparison
sweeps.  Everything here is deterministic and serializes to CSV/JSON with
fixed formatting, so identical inputs give byte-identical files.
"""

import json
import math
import time as _time
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    IntegratorSettings,
    NoiseRates,
    evolve_lab,
    evolve_static,
    interaction_frame,
)
from .hamiltonian import LoopWindow, SystemConfig, couplings_for_window, effective_hamiltonian
from .loop3 import circulation_period
from .protocol import build_ghz_schedule, execute_noisy
from .states import label_to_index, make_basis_state
from .units import TWO_PI

# Lab-frame defaults for frame-comparison sweeps: alternating qubit
# frequencies 400/200 MHz, i.e. a 200 MHz nearest-neighbour detuning.
DEFAULT_SWEEP_DETUNING = TWO_PI * 0.2  # rad/ns
DEFAULT_SWEEP_OMEGA_HIGH = TWO_PI * 0.4  # rad/ns


@dataclass(frozen=True)
class PopulationTrace:
    """Sampled basis-state occupations on a uniform time grid."""

    times: np.ndarray
    labels: tuple
    columns: np.ndarray  # shape (samples, len(labels))

    def __post_init__(self):
        self.times.setflags(write=False)
        self.columns.setflags(write=False)

    def column(self, label):
        return self.columns[:, self.labels.index(label)]


@dataclass(frozen=True)
class FidelityReport:
    """One noisy GHZ run: parameters, result, and runtime metadata."""

    n: int
    gamma: float  # 1/ns
    gamma_phi: float  # 1/ns
    swap_time: float  # ns
    fidelity: float
    step: float  # ns
    wall_time: float = 0.0  # seconds; excluded from serialized output


@dataclass(frozen=True)
class RwaPoint:
    """Lab-frame versus rotating-frame mismatch for one coupling ratio."""

    ratio: float
    infidelity: float
    g0: float  # rad/ns
    detuning: float  # rad/ns
    step: float  # ns
    swap_time: float  # ns


def population_trace(config, window, initial, t_max, samples):
    """Occupation of each same-excitation basis state along the evolution.

    The columns cover the excitation sector of the initial label, initial
    state first, remaining labels by descending basis index.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    n = config.n_qubits
    if len(initial) != n:
        raise ValueError(f"initial label {initial!r} does not match {n} qubits")
    k = initial.count("1")
    sector = [
        format(i, f"0{n}b")
        for i in sorted(range(2**n), reverse=True)
        if format(i, f"0{n}b").count("1") == k
    ]
    labels = (initial, *[s for s in sector if s != initial])
    h = effective_hamiltonian(config, window)
    freqs, vecs = np.linalg.eigh(h.matrix)
    psi0 = make_basis_state(n, initial).amplitudes
    coeffs = vecs.conj().T @ psi0
    times = np.linspace(0.0, t_max, samples)
    phases = np.exp(-1j * np.outer(times, freqs))  # (samples, dim)
    states = (phases * coeffs[None, :]) @ vecs.T  # (samples, dim) amplitudes
    idx = [label_to_index(lbl) for lbl in labels]
    columns = np.abs(states[:, idx]) ** 2
    return PopulationTrace(times.copy(), labels, columns)


def fidelity_vs_n(ns, gammas, g0, settings=None, gamma_phi=0.0):
    """Noisy GHZ fidelity for every (n, gamma) pair, in input order."""
    settings = settings or IntegratorSettings()
    swap = circulation_period(g0).swap_time
    reports = []
    for n in ns:
        if n < 3:
            raise ValueError("fidelity sweeps start at n = 3")
        schedule = build_ghz_schedule(n, g0)
        for gamma in gammas:
            noise = NoiseRates.uniform(n, gamma, gamma_phi)
            t0 = _time.perf_counter()
            _, fid = execute_noisy(schedule, noise, settings)
            wall = _time.perf_counter() - t0
            step = settings.step if settings.step is not None else swap / 2000
            reports.append(
                FidelityReport(n, gamma, gamma_phi, swap, fid, step, wall)
            )
    return reports


def _lab_step_for(config, duration, tolerance):
    """Step keeping the predicted RK4 norm drift safely under tolerance.

    The one-step amplification of RK4 on the imaginary axis is
    |R(i y)|^2 = 1 - y^6/72 + O(y^8), so the drift over a run is about
    duration * lam_max^6 * h^5 / 72.  The step targets a thirtieth of the
    tolerance: the returned states must also satisfy the stricter
    StateVector norm invariant, not just the integrator budget.
    """
    lam_max = 0.5 * sum(abs(w) for w in config.omega) + 2.0 * config.g0
    h = (2.4 * tolerance / (duration * lam_max**6)) ** 0.2
    max_omega = max(abs(w) for w in config.omega)
    return min(h, TWO_PI / (40.0 * max_omega), duration / 100.0)


def rwa_sweep(ratios, config=None, tolerance=1e-8, checkpoints=64):
    """Mismatch between full lab-frame evolution and the rotating frame.

    For each coupling ratio g0/detuning, one quarter-turn window is
    integrated in the lab frame and compared, in the interaction frame,
    with the rotating-frame propagator.  The reported infidelity is the
    overlap deficit 1 - |<reference|state>|^2 averaged over `checkpoints`
    times spanning the window: the deficit at any single instant rides on
    a fast micromotion oscillation whose phase at the window end,
    2*detuning*T mod 2*pi, is set by the ratio alone, so only the averaged
    deficit scales cleanly with the square of the ratio.  Ratios must lie
    in (0, 0.2] for the rotating-frame picture to be meaningful.
    """
    ratios = list(ratios)
    if not ratios:
        raise ValueError("need at least one ratio")
    if any(not 0 < r <= 0.2 for r in ratios):
        raise ValueError("ratios must lie in (0, 0.2]")
    points = []
    for ratio in ratios:
        if config is None:
            delta = DEFAULT_SWEEP_DETUNING
            omega = (DEFAULT_SWEEP_OMEGA_HIGH, DEFAULT_SWEEP_OMEGA_HIGH - delta,
                     DEFAULT_SWEEP_OMEGA_HIGH)
            cfg = SystemConfig(3, omega, ratio * delta)
        else:
            delta = config.omega[0] - config.omega[1]
            cfg = SystemConfig(
                config.n_qubits, config.omega, ratio * abs(delta),
                config.decay, config.dephasing, config.chirality_sign,
            )
        swap = circulation_period(cfg.g0).swap_time
        window = LoopWindow((1, 2, 3), 0.0, swap, (0.0, math.pi / 2.0, 0.0),
                            g0_override=cfg.g0)
        specs = couplings_for_window(cfg, window)
        h_eff = effective_hamiltonian(cfg, window)
        step = _lab_step_for(cfg, swap, tolerance)
        settings = IntegratorSettings(step=step, tolerance=tolerance)
        psi0 = make_basis_state(cfg.n_qubits, "100")
        state = psi0
        deficit = 0.0
        t_prev = 0.0
        for t in np.linspace(0.0, swap, checkpoints + 1)[1:]:
            state = evolve_lab(state, cfg, specs, t_prev, t, settings)
            rotated = interaction_frame(state, cfg, t)
            reference = evolve_static(psi0, h_eff, t)
            deficit += 1.0 - abs(np.vdot(reference.amplitudes, rotated.amplitudes)) ** 2
            t_prev = t
        points.append(
            RwaPoint(ratio, deficit / checkpoints, cfg.g0, abs(delta), step, swap)
        )
    return points


# --- serialization ---------------------------------------------------------


def _num(x):
    return f"{x:.12g}"


def trace_csv(trace):
    header = "t_ns," + ",".join(f"P_{lbl}" for lbl in trace.labels)
    rows = [header]
    for t, row in zip(trace.times, trace.columns):
        rows.append(_num(t) + "," + ",".join(_num(p) for p in row))
    return "\n".join(rows) + "\n"


REPORT_FIELDS = ("n", "gamma_per_ns", "gamma_phi_per_ns", "T_ns", "fidelity", "step_ns")


def _report_values(report):
    return (report.n, report.gamma, report.gamma_phi, report.swap_time,
            report.fidelity, report.step)


def reports_csv(reports):
    rows = [",".join(REPORT_FIELDS)]
    for r in reports:
        values = _report_values(r)
        rows.append(",".join(str(v) if isinstance(v, int) else _num(v) for v in values))
    return "\n".join(rows) + "\n"


def reports_json(reports):
    objs = [
        {k: v for k, v in zip(REPORT_FIELDS, _report_values(r))} for r in reports
    ]
    return json.dumps(objs, indent=2, sort_keys=True) + "\n"


def rwa_csv(points):
    rows = ["ratio,infidelity,g0_rad_per_ns,delta_rad_per_ns,step_ns,T_ns"]
    for p in points:
        rows.append(",".join(_num(v) for v in
                             (p.ratio, p.infidelity, p.g0, p.detuning, p.step, p.swap_time)))
    return "\n".join(rows) + "\n"

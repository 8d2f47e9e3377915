"""State propagation: exact unitary evolution, lab-frame integration,
Lindblad master equation, and a Monte-Carlo trajectory oracle.

Noisy runs integrate the master equation

    drho/dt = -i[H, rho] + sum_q gamma_q D[sigma_q^-] rho
              + sum_q (gamma_phi_q / 2) D[sigma_q^z] rho

with D[L]rho = L rho L^+ - {L^+L, rho}/2, using a fixed-step classical
4th-order Runge-Kutta scheme.  Every accepted run is re-integrated at half
the step and the two endpoints compared (the step-halving check), so results
are reproducible bit for bit and silently inaccurate steps are rejected.

The right-hand side never forms superoperators or full-size matrix products:
window Hamiltonians act on a contiguous three-qubit block, relaxation is a
slice shift, dephasing and the anticommutator part are a single elementwise
mask.  That keeps nine-qubit runs tractable.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError
from .hamiltonian import lab_hamiltonian
from .states import DensityMatrix, StateVector
from .units import TWO_PI

RK4_METHOD = "fixed-step-4th-order"
DEFAULT_SUBSTEPS = 2000  # effective-frame default: step = duration / 2000


@dataclass(frozen=True)
class NoiseRates:
    """Per-qubit relaxation and pure-dephasing rates (1/ns)."""

    decay: tuple
    dephasing: tuple

    def __post_init__(self):
        decay = tuple(float(g) for g in self.decay)
        dephasing = tuple(float(g) for g in self.dephasing)
        if len(decay) != len(dephasing):
            raise ValueError("decay and dephasing need one rate per qubit each")
        if any(g < 0 for g in decay + dephasing):
            raise ValueError("noise rates must be >= 0")
        object.__setattr__(self, "decay", decay)
        object.__setattr__(self, "dephasing", dephasing)

    @classmethod
    def uniform(cls, n_qubits, gamma, gamma_phi=0.0):
        return cls((gamma,) * n_qubits, (gamma_phi,) * n_qubits)

    @property
    def n_qubits(self):
        return len(self.decay)

    @property
    def silent(self):
        return all(g == 0 for g in self.decay + self.dephasing)


@dataclass(frozen=True)
class IntegratorSettings:
    """Fixed-step integrator knobs.

    step None picks the context default (duration/2000 for effective-frame
    runs, 2*pi/(40*max omega) in the lab frame).  `tolerance` bounds the
    norm/trace drift and the step-halving discrepancy; `halving_check`
    controls whether Lindblad runs perform the halved-step comparison.
    """

    step: float = None
    method: str = RK4_METHOD
    tolerance: float = 1e-8
    halving_check: bool = True

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.method != RK4_METHOD:
            raise ValueError(f"unsupported method {self.method!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def _steps_for(duration, step):
    n = max(1, int(round(duration / step)))
    return n, duration / n


def evolve_static(state, hamiltonian, duration):
    """Propagate a pure state under a constant Hamiltonian.

    Uses the eigendecomposition exp(-iHt) = V exp(-i lambda t) V^+, exact to
    linear-algebra precision; the norm is preserved.
    """
    if hamiltonian.dim != state.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    freqs, vecs = np.linalg.eigh(hamiltonian.matrix)
    phases = np.exp(-1j * freqs * duration)
    amps = vecs @ (phases * (vecs.conj().T @ state.amplitudes))
    return StateVector(state.n_qubits, amps)


def interaction_frame(state, config, t):
    """Rotate a lab-frame state into the frame of the bare qubit splittings.

    Applies exp(+i * t * sum_q (omega_q/2) sigma_q^z); populations are
    untouched.
    """
    n = state.n_qubits
    idx = np.arange(state.dim)
    angle = np.zeros(state.dim)
    for q in range(1, n + 1):
        z = np.where((idx >> (n - q)) & 1, 1.0, -1.0)
        angle += 0.5 * config.omega[q - 1] * t * z
    return StateVector(n, np.exp(1j * angle) * state.amplitudes)


def evolve_lab(state, config, specs, t0, t1, settings=None):
    """Integrate the time-dependent lab-frame Schroedinger equation.

    Fixed-step RK4 over [t0, t1].  The step must resolve the fastest qubit
    frequency (step <= 2*pi/(20*max omega)); the final norm drift is
    measured and an AccuracyError raised when it exceeds the tolerance.
    The drift is never repaired by renormalizing.
    """
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    settings = settings or IntegratorSettings()
    max_omega = max((abs(w) for w in config.omega), default=0.0)
    if settings.step is not None:
        step = settings.step
    elif max_omega > 0:
        step = TWO_PI / (40.0 * max_omega)
    else:
        step = (t1 - t0) / 1000.0
    if max_omega > 0 and step > TWO_PI / (20.0 * max_omega):
        raise ValueError(
            f"step {step:g} ns too coarse for max omega {max_omega:g} rad/ns"
        )
    n_steps, h = _steps_for(t1 - t0, step)

    def deriv(t, psi):
        m = lab_hamiltonian(config, specs, t).matrix
        return -1j * (m @ psi)

    psi = state.amplitudes.copy()
    t = t0
    for _ in range(n_steps):
        k1 = deriv(t, psi)
        k2 = deriv(t + 0.5 * h, psi + 0.5 * h * k1)
        k3 = deriv(t + 0.5 * h, psi + 0.5 * h * k2)
        k4 = deriv(t + h, psi + h * k3)
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    drift = abs(float(np.vdot(psi, psi).real) - 1.0)
    if drift > settings.tolerance:
        raise AccuracyError(
            f"norm drift {drift:.3e} exceeds tolerance {settings.tolerance:g}; "
            "reduce the step",
            drift=drift,
        )
    return StateVector(state.n_qubits, psi)


class _LindbladKernel:
    """Preassembled right-hand side of the master equation for one segment."""

    def __init__(self, h_matrix, n_qubits, noise):
        dim = h_matrix.shape[0]
        self.dim = dim
        self.n = n_qubits
        self._setup_hamiltonian(np.asarray(h_matrix, dtype=complex))
        self._setup_dissipators(noise)
        self._a = np.empty((dim, dim), dtype=complex)
        self._m = np.empty((dim, dim), dtype=complex)
        self._k = np.empty((dim, dim), dtype=complex)
        self._acc = np.empty((dim, dim), dtype=complex)
        self._stage = np.empty((dim, dim), dtype=complex)

    def _setup_hamiltonian(self, h):
        n = self.n
        rows, cols = np.nonzero(h)
        if rows.size == 0:
            self.mode = "zero"
            return
        offmask = 0
        for r, c in zip(rows.tolist(), cols.tolist()):
            offmask |= r ^ c
        if offmask == 0:
            self.mode = "diagonal"
            self.diag = -1j * np.ascontiguousarray(np.diag(h))
            return
        hi = offmask.bit_length() - 1
        lo = (offmask & -offmask).bit_length() - 1
        pre = 2 ** (n - 1 - hi)
        blk = 2 ** (hi - lo + 1)
        post = 2**lo
        sel = np.arange(blk) << lo
        block = h[np.ix_(sel, sel)].copy()
        rebuilt = np.kron(np.kron(np.eye(pre), block), np.eye(post))
        if np.array_equal(rebuilt, h):
            self.mode = "local"
            self.pre, self.blk = pre, blk
            self.hblock = -1j * block  # premultiplied: a = (-i H) rho
        else:
            self.mode = "dense"
            self.h = -1j * h

    def _setup_dissipators(self, noise):
        n, dim = self.n, self.dim
        idx = np.arange(dim)
        damp = np.zeros(dim)
        w = None
        for q in range(1, n + 1):
            bit = (idx >> (n - q)) & 1
            if noise.decay[q - 1] > 0:
                damp = damp + noise.decay[q - 1] * bit
            gp = noise.dephasing[q - 1]
            if gp > 0:
                z = np.where(bit, 1.0, -1.0)
                term = 0.5 * gp * (np.outer(z, z) - 1.0)
                w = term if w is None else w + term
        if np.any(damp):
            anticomm = -0.5 * (damp[:, None] + damp[None, :])
            w = anticomm if w is None else w + anticomm
        self.w = w
        self.jumps = [
            (noise.decay[q - 1], 2 ** (q - 1), 2 ** (n - q))
            for q in range(1, n + 1)
            if noise.decay[q - 1] > 0
        ]

    def rhs(self, rho, out):
        # unitary part: out = A + A^+ with A = -i H rho (exactly Hermitian)
        a = self._a
        if self.mode == "zero":
            out.fill(0.0)
        else:
            if self.mode == "local":
                r3 = rho.reshape(self.pre, self.blk, -1)
                np.matmul(self.hblock, r3, out=a.reshape(self.pre, self.blk, -1))
            elif self.mode == "diagonal":
                np.multiply(self.diag[:, None], rho, out=a)
            else:
                np.matmul(self.h, rho, out=a)
            np.add(a, a.conj().T, out=out)
        if self.w is not None:
            np.multiply(self.w, rho, out=self._m)
            out += self._m
        for gamma, pre, post in self.jumps:
            src = rho.reshape(pre, 2, post, pre, 2, post)[:, 1, :, :, 1, :]
            dst = out.reshape(pre, 2, post, pre, 2, post)[:, 0, :, :, 0, :]
            dst += gamma * src
        return out

    def integrate(self, rho, duration, step):
        """March rho (modified in place) through `duration` with RK4."""
        n_steps, h = _steps_for(duration, step)
        k, acc, stage = self._k, self._acc, self._stage
        for _ in range(n_steps):
            self.rhs(rho, k)
            np.copyto(acc, k)
            np.multiply(k, 0.5 * h, out=stage)
            stage += rho
            self.rhs(stage, k)
            acc += k
            acc += k
            np.multiply(k, 0.5 * h, out=stage)
            stage += rho
            self.rhs(stage, k)
            acc += k
            acc += k
            np.multiply(k, h, out=stage)
            stage += rho
            self.rhs(stage, k)
            acc += k
            acc *= h / 6.0
            rho += acc
        return rho


def _trace_distance(rho_a, rho_b):
    eigs = np.linalg.eigvalsh(rho_a - rho_b)
    return 0.5 * float(np.sum(np.abs(eigs)))


def evolve_lindblad(rho, hamiltonian, noise, duration, settings=None):
    """Propagate a density matrix through one constant-Hamiltonian segment.

    Integrates at the requested step and, unless disabled, again at half the
    step; if the two endpoints differ by more than the tolerance (trace
    distance) an AccuracyError reports the measured drift.  The halved-step
    result is returned.  Trace and Hermiticity are preserved by construction
    and re-checked on exit.
    """
    if hamiltonian.dim != rho.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    if noise.n_qubits != rho.n_qubits:
        raise ValueError("noise rates do not match the register size")
    settings = settings or IntegratorSettings()
    step = settings.step if settings.step is not None else duration / DEFAULT_SUBSTEPS
    kernel = _LindbladKernel(hamiltonian.matrix, rho.n_qubits, noise)
    coarse = kernel.integrate(rho.elements.copy(), duration, step)
    if settings.halving_check:
        fine = kernel.integrate(rho.elements.copy(), duration, 0.5 * step)
        drift = _trace_distance(coarse, fine)
        if drift > settings.tolerance:
            raise AccuracyError(
                f"step-halving check failed: trace distance {drift:.3e} exceeds "
                f"tolerance {settings.tolerance:g}",
                drift=drift,
            )
        result = fine
    else:
        result = coarse
    trace_drift = abs(float(np.trace(result).real) - 1.0)
    if trace_drift > settings.tolerance:
        raise AccuracyError(
            f"trace drift {trace_drift:.3e} exceeds tolerance", drift=trace_drift
        )
    return DensityMatrix(rho.n_qubits, result)


# --- Monte-Carlo wavefunction oracle -------------------------------------


def _jump_channels(n, noise):
    """(rate, kind, qubit) for every active collapse channel, in qubit order."""
    channels = []
    for q in range(1, n + 1):
        if noise.decay[q - 1] > 0:
            channels.append((noise.decay[q - 1], "lower", q))
    for q in range(1, n + 1):
        if noise.dephasing[q - 1] > 0:
            channels.append((0.5 * noise.dephasing[q - 1], "z", q))
    return channels


def _apply_channel(psi, kind, q, n):
    """Apply an (unnormalized) collapse operator to one column state."""
    pre, post = 2 ** (q - 1), 2 ** (n - q)
    v = psi.reshape(pre, 2, post)
    if kind == "lower":
        out = np.zeros_like(v)
        out[:, 0, :] = v[:, 1, :]
        return out.reshape(-1)
    out = v.copy()
    out[:, 0, :] *= -1.0
    return out.reshape(-1)


def _channel_weight(psi, kind, q, n, rate):
    if kind == "z":
        return rate * float(np.vdot(psi, psi).real)
    pre, post = 2 ** (q - 1), 2 ** (n - q)
    v = psi.reshape(pre, 2, post)
    return rate * float(np.sum(np.abs(v[:, 1, :]) ** 2))


def trajectory_rngs(seed, n_traj):
    """One independent, reproducible random stream per trajectory.

    Stream k is `np.random.default_rng([seed, k])` and consumes exactly two
    uniforms per integration step (jump decision, channel choice), whether
    or not a jump occurs.  Batched and serial execution therefore see
    identical randomness.
    """
    return [np.random.default_rng([seed, k]) for k in range(n_traj)]


class TrajectoryBatch:
    """A batch of stochastic wavefunctions sharing a noise model.

    Columns are individual normalized trajectories.  `evolve` marches all of
    them through one constant-Hamiltonian segment; pulses between segments
    can be applied with `apply_unitary`.  Randomness comes from the
    per-trajectory streams created by `trajectory_rngs`.
    """

    def __init__(self, state, noise, n_traj, seed):
        self.n = state.n_qubits
        self.dim = state.dim
        self.noise = noise
        self.n_traj = n_traj
        self.columns = np.repeat(state.amplitudes[:, None], n_traj, axis=1)
        self._rngs = trajectory_rngs(seed, n_traj)
        self.channels = _jump_channels(self.n, noise)

    def apply_unitary(self, u):
        self.columns = u @ self.columns

    def evolve(self, h_matrix, duration, step):
        n_steps, h = _steps_for(duration, step)
        decay_shift = sum(
            0.5 * rate * (1.0 if kind == "z" else 0.0)
            for rate, kind, _ in self.channels
        )
        h_nh = np.asarray(h_matrix, dtype=complex).copy()
        idx = np.arange(self.dim)
        for q in range(1, self.n + 1):
            g = self.noise.decay[q - 1]
            if g > 0:
                bit = (idx >> (self.n - q)) & 1
                h_nh[idx, idx] += -0.5j * g * bit
        h_nh[idx, idx] += -1j * decay_shift
        uniforms = np.stack(
            [rng.random((n_steps, 2)) for rng in self._rngs]
        )  # (n_traj, n_steps, 2)
        psi = self.columns
        for s in range(n_steps):
            prev = psi.copy()
            k1 = -1j * (h_nh @ psi)
            k2 = -1j * (h_nh @ (psi + 0.5 * h * k1))
            k3 = -1j * (h_nh @ (psi + 0.5 * h * k2))
            k4 = -1j * (h_nh @ (psi + h * k3))
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            norms = np.einsum("ij,ij->j", psi.conj(), psi).real
            jump_prob = 1.0 - norms
            jumping = np.nonzero(uniforms[:, s, 0] < jump_prob)[0]
            for t in jumping:
                col = prev[:, t]
                weights = [
                    _channel_weight(col, kind, q, self.n, rate)
                    for rate, kind, q in self.channels
                ]
                total = sum(weights)
                pick = uniforms[t, s, 1] * total
                acc = 0.0
                chosen = self.channels[-1]
                for (rate, kind, q), wgt in zip(self.channels, weights):
                    acc += wgt
                    if pick < acc:
                        chosen = (rate, kind, q)
                        break
                new = _apply_channel(col, chosen[1], chosen[2], self.n)
                psi[:, t] = new / np.linalg.norm(new)
                norms[t] = 1.0
            psi /= np.sqrt(norms)[None, :]
        self.columns = psi

    def density_matrix(self):
        rho = (self.columns @ self.columns.conj().T) / self.n_traj
        return DensityMatrix(self.n, rho)


def evolve_trajectories(state, hamiltonian, noise, duration, settings=None, n_traj=2000, seed=0):
    """Monte-Carlo wavefunction average over one segment.

    Independent oracle for `evolve_lindblad`: deterministic for a fixed
    seed, and with all rates zero every trajectory reproduces the unitary
    evolution exactly.
    """
    if n_traj < 100:
        raise ValueError("need at least 100 trajectories")
    if hamiltonian.dim != state.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    settings = settings or IntegratorSettings()
    step = settings.step if settings.step is not None else duration / DEFAULT_SUBSTEPS
    batch = TrajectoryBatch(state, noise, n_traj, seed)
    batch.evolve(hamiltonian.matrix, duration, step)
    return batch.density_matrix()

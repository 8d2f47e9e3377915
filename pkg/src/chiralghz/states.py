"""Register states (pure and mixed), ideal pulses and gates, measurements.

Conventions used throughout the package:

* Qubit 1 is the most significant bit of a basis-state index, so the label
  "100" on three qubits is index 4 and kets read left to right.
* Basis labels are plain strings of '0'/'1' characters.
* Qubit arguments of all public operations are 1-based.
* pi pulses in protocols are exact bit flips (kind "flip-x"), not rotations
  by pi about y: a y rotation maps |1> -> -|0> and the stray minus sign would
  spoil the relative phase of superpositions the GHZ chain relies on.
  pi/2 pulses are rotations about y, so |0> -> (|0>+|1>)/sqrt(2).

All values are immutable after construction; operations return new values.
"""

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-10
TRACE_TOL = 1e-8
HERM_TOL = 1e-10
EIG_TOL = 1e-8


def label_to_index(label):
    """Basis label ("100") -> integer index, qubit 1 most significant."""
    if not label or any(c not in "01" for c in label):
        raise ValueError(f"invalid basis label {label!r}")
    return int(label, 2)


def index_to_label(index, n_qubits):
    """Integer index -> basis label of length n_qubits."""
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"index {index} out of range for {n_qubits} qubits")
    return format(index, f"0{n_qubits}b")


def _frozen(a):
    a = np.asarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Pure state of an n-qubit register: 2^n complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = _frozen(self.amplitudes)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm**2 - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |norm^2 - 1| = {abs(norm**2-1):.3e}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self):
        return 2**self.n_qubits

    def probability(self, label):
        return float(abs(self.amplitudes[label_to_index(label)]) ** 2)

    def to_density_matrix(self):
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state of an n-qubit register: 2^n x 2^n Hermitian, unit trace."""

    n_qubits: int
    elements: np.ndarray

    def __post_init__(self):
        dim = 2**self.n_qubits
        rho = _frozen(self.elements)
        if rho.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {rho.shape}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERM_TOL:
            raise ValueError(f"density matrix not Hermitian: max|rho-rho^+| = {herm:.3e}")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} not within {TRACE_TOL} of 1")
        lo = np.linalg.eigvalsh(rho)[0]
        if lo < -EIG_TOL:
            raise ValueError(f"negative eigenvalue {lo:.3e} below tolerance")
        object.__setattr__(self, "elements", rho)

    @property
    def dim(self):
        return 2**self.n_qubits

    def probability(self, label):
        i = label_to_index(label)
        return float(self.elements[i, i].real)


@dataclass(frozen=True)
class PulseEvent:
    """An instantaneous single-qubit drive pulse.

    kind "rotation" applies exp(-i*angle/2*(cos(axis_phase)*X + sin(axis_phase)*Y));
    kind "flip-x" applies the exact bit-flip gate and requires angle == pi.
    """

    time: float
    qubit: int
    angle: float
    axis_phase: float = 0.0
    kind: str = "rotation"

    def __post_init__(self):
        if self.kind not in ("rotation", "flip-x"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not 0.0 < self.angle <= 2 * np.pi + 1e-12:
            raise ValueError(f"angle {self.angle} outside (0, 2*pi]")
        if self.kind == "flip-x" and abs(self.angle - np.pi) > 1e-12:
            raise ValueError("flip-x pulses require angle = pi")
        if self.qubit < 1:
            raise ValueError("qubit indices are 1-based")


def _single_qubit_unitary(pulse):
    if pulse.kind == "flip-x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    c = np.cos(pulse.angle / 2)
    s = np.sin(pulse.angle / 2)
    e = np.exp(1j * pulse.axis_phase)
    # exp(-i*theta/2 * (cos(phi) X + sin(phi) Y))
    return np.array([[c, -1j * s / e], [-1j * s * e, c]], dtype=complex)


def _apply_1q(amps, n, qubit, u):
    # reshape so the target qubit is the middle axis; qubit 1 is the MSB
    left = 2 ** (qubit - 1)
    right = 2 ** (n - qubit)
    a = amps.reshape(left, 2, right)
    return np.einsum("ij,ajb->aib", u, a).reshape(-1)


def make_basis_state(n, label):
    """Computational basis state |label> on n qubits."""
    if len(label) != n:
        raise ValueError(f"label {label!r} has length {len(label)}, expected {n}")
    amps = np.zeros(2**n, dtype=complex)
    amps[label_to_index(label)] = 1.0
    return StateVector(n, amps)


def apply_pulse(state, pulse):
    """Apply a PulseEvent to the target qubit of a StateVector."""
    if pulse.qubit > state.n_qubits:
        raise ValueError(f"qubit {pulse.qubit} out of range for {state.n_qubits} qubits")
    u = _single_qubit_unitary(pulse)
    return StateVector(state.n_qubits, _apply_1q(state.amplitudes, state.n_qubits, pulse.qubit, u))


def apply_pulse_rho(rho, pulse):
    """Apply a PulseEvent to a DensityMatrix (U rho U^+)."""
    if pulse.qubit > rho.n_qubits:
        raise ValueError(f"qubit {pulse.qubit} out of range for {rho.n_qubits} qubits")
    u = embed_single_qubit(_single_qubit_unitary(pulse), rho.n_qubits, pulse.qubit)
    return DensityMatrix(rho.n_qubits, u @ rho.elements @ u.conj().T)


def embed_single_qubit(u, n, qubit):
    """Embed a 2x2 operator on the given 1-based qubit into the 2^n space."""
    op = np.array([[1.0 + 0j]])
    for q in range(1, n + 1):
        op = np.kron(op, u if q == qubit else np.eye(2))
    return op


def apply_cnot(state, control, target):
    """Flip the target bit on components where the control bit is 1."""
    n = state.n_qubits
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    amps = state.amplitudes.copy()
    cbit = n - control
    tbit = n - target
    idx = np.arange(2**n)
    sel = (idx >> cbit) & 1 == 1
    amps[idx[sel]] = state.amplitudes[idx[sel] ^ (1 << tbit)]
    return StateVector(n, amps)


def cnot_unitary(n, control, target):
    """CNOT as a dense 2^n unitary (for density-matrix runs)."""
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    cbit = n - control
    tbit = n - target
    for i in range(dim):
        j = i ^ (1 << tbit) if (i >> cbit) & 1 else i
        u[j, i] = 1.0
    return u


def ghz_target(n):
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise ValueError("GHZ states need n >= 2")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return StateVector(n, amps)


def fidelity(state_or_rho, target):
    """Overlap with a pure target: |<t|psi>|^2, or <t|rho|t> for mixed input."""
    t = target.amplitudes
    if isinstance(state_or_rho, StateVector):
        if state_or_rho.dim != target.dim:
            raise ValueError("dimension mismatch")
        return float(abs(np.vdot(t, state_or_rho.amplitudes)) ** 2)
    if isinstance(state_or_rho, DensityMatrix):
        if state_or_rho.dim != target.dim:
            raise ValueError("dimension mismatch")
        return float(np.real(np.vdot(t, state_or_rho.elements @ t)))
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state_or_rho)}")


def populations(state_or_rho, labels):
    """Diagonal probabilities for the requested basis labels."""
    out = {}
    for label in labels:
        if len(label) != state_or_rho.n_qubits:
            raise ValueError(f"label {label!r} has wrong length")
        out[label] = state_or_rho.probability(label)
    return out

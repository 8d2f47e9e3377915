"""Hamiltonian builders for flux-threaded qubit loops.

Two frames are supported:

* the lab frame, where qubit pairs are coupled through a sinusoidally
  modulated exchange strength g0*cos(detuning*t + phase), and
* the rotating (interaction) frame, where each modulated pair reduces to a
  static complex hop (g0/2)*exp(i*phase) after dropping fast-rotating terms.

Phase bookkeeping is the only subtle part and is pinned here once:

* For an ordered pair (i, j) with i < j the rotating-frame term is
  (g0/2) * exp(i * chirality_sign * phi_ij) * sigma_i^+ sigma_j^-  + h.c.
  Reversing a pair negates its phase.
* The synthetic flux of a loop (a, b, c) is phi_ab + phi_bc + phi_ca reduced
  into (-pi, pi].  Flux +pi/2 circulates a single excitation a -> b -> c;
  flux -pi/2 reverses it.  chirality_sign = +1 is the calibration that makes
  this hold for the builders below (see tests for the pinning run).
* Modulating a lab pair at phase chi leaves the static rotating term
  (g0/2)*exp(-i*chi)*sigma_i^+ sigma_j^-, so the lab specs produced by
  `couplings_for_window` carry chi = -chirality_sign*phi to land exactly on
  the rotating-frame builder's convention.
* A degenerate pair (detuning 0) cannot be modulated; it keeps a static lab
  coupling of amplitude g0/2 so both frames agree.  Only real hops (phase 0
  or pi) are realizable on such a pair.
"""

import math
from dataclasses import dataclass

import numpy as np

from .units import TWO_PI

HERMITICITY_TOL = 1e-12


def _as_tuple(value, n, name):
    if np.isscalar(value):
        return (float(value),) * n
    out = tuple(float(v) for v in value)
    if len(out) != n:
        raise ValueError(f"{name} needs {n} entries, got {len(out)}")
    return out


@dataclass(frozen=True)
class SystemConfig:
    """Device parameters: qubit frequencies, base coupling, noise rates.

    Angular frequencies in rad/ns, rates in 1/ns.  `chirality_sign` pins the
    phase convention of the rotating-frame builder (see module docstring).
    """

    n_qubits: int
    omega: tuple
    g0: float
    decay: tuple = ()
    dephasing: tuple = ()
    chirality_sign: int = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.g0 <= 0:
            raise ValueError("g0 must be positive")
        if self.chirality_sign not in (1, -1):
            raise ValueError("chirality_sign must be +1 or -1")
        object.__setattr__(self, "omega", _as_tuple(self.omega, self.n_qubits, "omega"))
        decay = self.decay if self.decay != () else 0.0
        dephasing = self.dephasing if self.dephasing != () else 0.0
        object.__setattr__(self, "decay", _as_tuple(decay, self.n_qubits, "decay"))
        object.__setattr__(
            self, "dephasing", _as_tuple(dephasing, self.n_qubits, "dephasing")
        )
        if any(r < 0 for r in self.decay + self.dephasing):
            raise ValueError("noise rates must be >= 0")

    @classmethod
    def uniform(cls, n_qubits, g0, omega=0.0, decay=0.0, dephasing=0.0, chirality_sign=1):
        return cls(n_qubits, omega, g0, decay, dephasing, chirality_sign)


@dataclass(frozen=True)
class CouplingSpec:
    """A lab-frame modulated coupling g0*cos(detuning*t + phase) on pair (i, j), i < j."""

    qubits: tuple
    amplitude: float
    detuning: float
    phase: float

    def __post_init__(self):
        i, j = self.qubits
        if not (1 <= i < j):
            raise ValueError(f"pair {self.qubits} must satisfy 1 <= i < j")
        object.__setattr__(self, "qubits", (int(i), int(j)))

    def reversed(self):
        """Same physical coupling described from (j, i): phase negated."""
        return CouplingSpec(self.qubits, self.amplitude, -self.detuning, -self.phase)


@dataclass(frozen=True)
class LoopWindow:
    """A time window during which the three couplings of one loop are on.

    phases = (phi_ab, phi_bc, phi_ca) are rotating-frame hop phases for the
    ordered legs of the triple (a, b, c).
    """

    qubits: tuple
    start: float
    duration: float
    phases: tuple
    g0_override: float = None

    def __post_init__(self):
        a, b, c = self.qubits
        if len({a, b, c}) != 3 or min(a, b, c) < 1:
            raise ValueError(f"loop {self.qubits} must be three distinct 1-based qubits")
        if self.duration <= 0:
            raise ValueError("window duration must be positive")
        if len(self.phases) != 3:
            raise ValueError("phases must be (phi_ab, phi_bc, phi_ca)")
        object.__setattr__(self, "qubits", (int(a), int(b), int(c)))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense Hermitian operator on the full register (rad/ns)."""

    n_qubits: int
    matrix: np.ndarray
    excitation_conserving: bool = False

    def __post_init__(self):
        dim = 2**self.n_qubits
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
        herm = np.max(np.abs(m - m.conj().T)) if dim else 0.0
        if herm > HERMITICITY_TOL:
            raise ValueError(f"matrix not Hermitian: max|H-H^+| = {herm:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return 2**self.n_qubits


def coupling_amplitude(spec, t):
    """Instantaneous modulated coupling strength g0*cos(detuning*t + phase)."""
    return spec.amplitude * math.cos(spec.detuning * t + spec.phase)


def _hop_indices(n, i, j):
    """Column/row indices of sigma_i^+ sigma_j^- on n qubits (i != j, 1-based)."""
    mi = 1 << (n - i)
    mj = 1 << (n - j)
    idx = np.arange(2**n)
    cols = idx[((idx & mi) == 0) & ((idx & mj) != 0)]
    rows = cols ^ (mi | mj)
    return rows, cols


def lab_hamiltonian(config, specs, t):
    """Lab-frame Hamiltonian at time t: qubit splittings plus modulated hops.

    Degenerate pairs (detuning 0) enter statically with amplitude g0/2 so the
    lab and rotating frames agree (see module docstring).
    """
    n = config.n_qubits
    dim = 2**n
    idx = np.arange(dim)
    diag = np.zeros(dim)
    for q in range(1, n + 1):
        z = np.where((idx >> (n - q)) & 1, 1.0, -1.0)
        diag += 0.5 * config.omega[q - 1] * z
    h = np.diag(diag).astype(complex)
    for spec in specs:
        i, j = spec.qubits
        if j > n:
            raise ValueError(f"coupling pair {spec.qubits} out of range for {n} qubits")
        if spec.detuning != 0.0:
            g = coupling_amplitude(spec, t)
        else:
            g = 0.5 * spec.amplitude * math.cos(spec.phase)
        rows, cols = _hop_indices(n, i, j)
        h[rows, cols] += g
        h[cols, rows] += g
    return HamiltonianMatrix(n, h)


def window_legs(window):
    """The window's legs as ordered pairs (i, j) with i < j and their phases."""
    a, b, c = window.qubits
    p_ab, p_bc, p_ca = window.phases
    legs = []
    for (x, y), phase in (((a, b), p_ab), ((b, c), p_bc), ((c, a), p_ca)):
        if x < y:
            legs.append(((x, y), phase))
        else:
            legs.append(((y, x), -phase))
    return legs


def effective_hamiltonian(config, window):
    """Rotating-frame loop Hamiltonian embedded in the full register space.

    Each leg contributes (g0/2)*exp(i*s*phi)*sigma_i^+ sigma_j^- + h.c. with
    s = config.chirality_sign; the result commutes with the total excitation
    number.
    """
    n = config.n_qubits
    if max(window.qubits) > n:
        raise ValueError(f"window qubits {window.qubits} out of range for {n} qubits")
    g0 = window.g0_override if window.g0_override is not None else config.g0
    s = config.chirality_sign
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    for (i, j), phase in window_legs(window):
        coeff = 0.5 * g0 * np.exp(1j * s * phase)
        rows, cols = _hop_indices(n, i, j)
        h[rows, cols] += coeff
        h[cols, rows] += np.conj(coeff)
    return HamiltonianMatrix(n, h, excitation_conserving=True)


def couplings_for_window(config, window):
    """Lab-frame CouplingSpecs realizing a window's rotating-frame hops.

    Modulation phases are negated relative to the window phases because the
    static term surviving the rotating-wave step is exp(-i*chi).  Degenerate
    legs admit only real hops; a complex hop there has no lab realization.
    """
    specs = []
    g0 = window.g0_override if window.g0_override is not None else config.g0
    s = config.chirality_sign
    for (i, j), phase in window_legs(window):
        detuning = config.omega[i - 1] - config.omega[j - 1]
        chi = -s * phase
        if detuning == 0.0 and abs(math.sin(chi)) > 1e-9:
            raise ValueError(
                f"degenerate pair {(i, j)} cannot realize a complex hop "
                f"(phase {phase:g}); only 0 or pi is possible"
            )
        specs.append(CouplingSpec((i, j), g0, detuning, chi))
    return specs


def excitation_block(hamiltonian, k):
    """The k-excitation sub-matrix of an excitation-conserving Hamiltonian.

    Returns (block, labels) with labels ordered by descending basis index, so
    the one-excitation block of three qubits reads ("100", "010", "001").
    """
    n = hamiltonian.n_qubits
    if not 0 <= k <= n:
        raise ValueError(f"excitation number {k} outside 0..{n}")
    h = hamiltonian.matrix
    dim = hamiltonian.dim
    idx = np.arange(dim)
    counts = np.array([bin(i).count("1") for i in range(dim)])
    off = 0.0
    for ka in range(n + 1):
        sel = idx[counts == ka]
        other = idx[counts != ka]
        if len(sel) and len(other):
            off = max(off, np.max(np.abs(h[np.ix_(sel, other)])))
    if off > HERMITICITY_TOL:
        raise ValueError(
            f"Hamiltonian does not conserve excitation number (off-block {off:.3e})"
        )
    members = np.sort(idx[counts == k])[::-1]
    labels = [format(i, f"0{n}b") for i in members]
    return h[np.ix_(members, members)].copy(), labels


def loop_flux(window):
    """Synthetic flux phi_ab + phi_bc + phi_ca reduced into (-pi, pi]."""
    total = sum(window.phases)
    flux = math.remainder(total, TWO_PI)
    if flux <= -math.pi:
        flux += TWO_PI
    return flux

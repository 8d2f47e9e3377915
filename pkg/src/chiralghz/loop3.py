"""Closed-form physics of the three-qubit loop at quarter-turn flux.

The canonical loop carries flux +pi/2 in the convention of
`hamiltonian.effective_hamiltonian`: a single excitation started on site 1
is swapped to site 2 after T = 4*pi/(3*sqrt(3)*g0), to site 3 after 2T, and
returns after 3T.  Two excitations (one hole) circulate the opposite way.
"""

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import loop_flux, window_legs

SQRT3 = math.sqrt(3.0)

SINGLE_EXC_LABELS = ("100", "010", "001")
DOUBLE_EXC_LABELS = ("011", "101", "110")


@dataclass(frozen=True)
class LoopEigensystem:
    """Eigenfrequencies and eigenvectors of one excitation sector of the loop."""

    excitations: int
    frequencies: np.ndarray  # ordered (0, +sqrt(3)g0/2, -sqrt(3)g0/2)
    vectors: np.ndarray  # columns, same order, over the sector basis
    basis: tuple

    def __post_init__(self):
        self.frequencies.setflags(write=False)
        self.vectors.setflags(write=False)


@dataclass(frozen=True)
class CirculationTiming:
    """Site-to-site swap time T and full return period 3T."""

    swap_time: float
    period: float


def canonical_loop_matrix(g0, excitations=1):
    """The loop Hamiltonian block at flux +pi/2, uniform gauge.

    Every hop from a site to its cyclic successor carries amplitude
    -1j*g0/2; the two-excitation sector (hole picture, basis reversed
    bit-wise) is the negative of the single-excitation matrix.
    """
    if g0 <= 0:
        raise ValueError("g0 must be positive")
    hop = -0.5j * g0
    m = np.array(
        [[0, hop, np.conj(hop)], [np.conj(hop), 0, hop], [hop, np.conj(hop), 0]],
        dtype=complex,
    )
    if excitations == 1:
        return m
    if excitations == 2:
        return -m
    raise ValueError("excitations must be 1 or 2")


def loop_eigensystem(g0, excitations=1):
    """Diagonalize the canonical loop block.

    Eigenvalues come out as {0, +sqrt(3)/2*g0, -sqrt(3)/2*g0} with the zero
    mode the uniform superposition of the three sector states.
    """
    m = canonical_loop_matrix(g0, excitations)
    freqs, vecs = np.linalg.eigh(m)
    order = [1, 2, 0]  # eigh sorts ascending: (-, 0, +) -> (0, +, -)
    basis = SINGLE_EXC_LABELS if excitations == 1 else DOUBLE_EXC_LABELS
    return LoopEigensystem(
        excitations, freqs[order].copy(), vecs[:, order].copy(), basis
    )


def closed_form_populations(t, g0):
    """Site populations of a single excitation started on site 1.

    Each is (1 + 2*cos(sqrt(3)*g0*t/2 + offset))^2 / 9 with offsets
    (0, -2*pi/3, +2*pi/3); they sum to 1 at all times.
    """
    x = 0.5 * SQRT3 * g0 * t
    return tuple(
        (1.0 + 2.0 * math.cos(x + off)) ** 2 / 9.0
        for off in (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)
    )


def circulation_period(g0):
    """Swap time T = 4*pi/(3*sqrt(3)*g0) and the 3T return period."""
    if g0 <= 0:
        raise ValueError("g0 must be positive")
    swap = 4.0 * math.pi / (3.0 * SQRT3 * g0)
    return CirculationTiming(swap, 3.0 * swap)


def g0_for_swap_time(swap_time):
    """Coupling strength whose swap time equals the given T (ns -> rad/ns)."""
    if swap_time <= 0:
        raise ValueError("swap time must be positive")
    return 4.0 * math.pi / (3.0 * SQRT3 * swap_time)


def window_block(config, window, excitations=1):
    """3x3 sector block of a window's Hamiltonian over its own loop ordering.

    Basis: excitation on (a, b, c) for one excitation; hole on (a, b, c) for
    two.  The hole block is the elementwise conjugate of the excitation
    block, which is what reverses the circulation.
    """
    g0 = window.g0_override if window.g0_override is not None else config.g0
    s = config.chirality_sign
    pos = {q: p for p, q in enumerate(window.qubits)}
    block = np.zeros((3, 3), dtype=complex)
    for (i, j), phase in window_legs(window):
        coeff = 0.5 * g0 * np.exp(1j * s * phase)
        block[pos[i], pos[j]] = coeff
        block[pos[j], pos[i]] = np.conj(coeff)
    if excitations == 1:
        return block
    if excitations == 2:
        return block.conj()
    raise ValueError("excitations must be 1 or 2")


def circulation_direction(config, window, excitations=1, threshold=1e-6):
    """Sense of circulation around (a -> b -> c) for a quarter-turn window.

    Evolves the first sector state (excitation or hole on site a) for one
    swap time and reports +1 if it lands on site b, -1 if on site c.
    """
    flux = loop_flux(window)
    if abs(abs(flux) - math.pi / 2) > 1e-9:
        raise ValueError(
            f"clean transfer needs |flux| = pi/2, window has {flux:.6f} rad"
        )
    g0 = window.g0_override if window.g0_override is not None else config.g0
    block = window_block(config, window, excitations)
    freqs, vecs = np.linalg.eigh(block)
    swap = circulation_period(g0).swap_time
    start = np.array([1.0, 0.0, 0.0], dtype=complex)
    out = vecs @ (np.exp(-1j * freqs * swap) * (vecs.conj().T @ start))
    pops = np.abs(out) ** 2
    if pops[1] >= 1.0 - threshold:
        return 1
    if pops[2] >= 1.0 - threshold:
        return -1
    raise AssertionError(f"no clean transfer at |flux|=pi/2: populations {pops}")

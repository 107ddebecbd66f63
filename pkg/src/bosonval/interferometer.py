"""Interferometer unitaries, Haar sampling and beam-splitter circuits.

Coupler convention: a coupler with transmissivity ``tau`` on modes
``(j, j + 1)`` acts on those two modes as::

    [[sqrt(tau),        1j*sqrt(1-tau)],
     [1j*sqrt(1-tau),   sqrt(tau)     ]]

A phase element multiplies the amplitude of one mode by ``exp(1j*phi)``.

Matrices are indexed ``U[input, output]``, matching the submatrix rule
``A[i, j] = U[s_i, t_j]``. Circuit elements are listed in the order light
traverses them, so :func:`compose` returns ``E_1 @ E_2 @ ... @ E_k``.

All mode indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ConvergenceError, DimensionError, ModeConfigError, UnitarityError

LOAD_TOL = 1e-8
GENERATION_TOL = 1e-12
ROUNDTRIP_TOL = 1e-10

TWO_PI = 2 * np.pi


def unitarity_residual(matrix: np.ndarray) -> float:
    """Max-norm of ``U^dagger U - I``."""
    m = matrix.shape[0]
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(m))))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Interferometer:
    """An m x m unitary plus a note on where it came from.

    ``provenance`` is a short string such as ``"haar(seed=7)"``,
    ``"circuit(random-phases)"`` or ``"file(path/to/u.json)"``.
    """

    matrix: np.ndarray
    provenance: str = "matrix"
    tol: float = field(default=LOAD_TOL, repr=False)

    def __post_init__(self):
        arr = np.asarray(self.matrix)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DimensionError(f"interferometer matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DimensionError("interferometer matrix has non-finite entries")
        arr = _frozen(arr)
        residual = unitarity_residual(arr)
        if residual > self.tol:
            raise UnitarityError(f"matrix is not unitary: max|U^dagger U - I| = {residual:.3e} > {self.tol:g}")
        object.__setattr__(self, "matrix", arr)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def residual(self) -> float:
        return unitarity_residual(self.matrix)


def haar_unitary(m: int, seed) -> Interferometer:
    """Draw an m x m unitary from the Haar measure.

    A complex Gaussian matrix is QR-factorised and each column of Q is
    multiplied by the phase of the matching diagonal entry of R, which removes
    the bias of the factorisation. ``seed`` is anything
    :func:`numpy.random.default_rng` accepts; equal seeds give bit-identical
    matrices.
    """
    if m < 1:
        raise DimensionError("haar_unitary needs m >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Interferometer(q, provenance=f"haar(m={m}, seed={_seed_label(seed)})", tol=GENERATION_TOL)


def _seed_label(seed) -> str:
    if isinstance(seed, np.random.SeedSequence):
        return f"{seed.entropy}/{list(seed.spawn_key)}"
    return repr(seed)


def submatrix(u: Interferometer | np.ndarray, s, t) -> np.ndarray:
    """The n x n matrix with ``A[i, j] = U[s_i, t_j]``.

    Rows follow the input modes ``s`` and columns the output modes ``t``,
    both ascending.
    """
    matrix = u.matrix if isinstance(u, Interferometer) else np.asarray(u)
    s_modes = _modes_of(s)
    t_modes = _modes_of(t)
    m = matrix.shape[0]
    for name, modes in (("input", s_modes), ("output", t_modes)):
        if any(x < 0 or x >= m for x in modes):
            raise ModeConfigError(f"{name} modes {modes} out of range for m={m}")
    return matrix[np.ix_(s_modes, t_modes)]


def _modes_of(config) -> tuple[int, ...]:
    return tuple(int(x) for x in getattr(config, "modes", config))


# -- circuits -----------------------------------------------------------------


@dataclass(frozen=True)
class Coupler:
    mode: int  # acts on (mode, mode + 1)
    tau: float

    @property
    def modes(self) -> tuple[int, int]:
        return (self.mode, self.mode + 1)

    def block(self) -> np.ndarray:
        t = np.sqrt(self.tau)
        r = 1j * np.sqrt(1.0 - self.tau)
        return np.array([[t, r], [r, t]], dtype=complex)


@dataclass(frozen=True)
class Phase:
    mode: int
    phi: float


Element = Union[Coupler, Phase]


@dataclass(frozen=True)
class Circuit:
    modes: int
    elements: tuple[Element, ...] = ()

    def __post_init__(self):
        if self.modes < 1:
            raise DimensionError("circuit needs at least one mode")
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if isinstance(el, Coupler):
                if not (0 <= el.mode and el.mode + 1 < self.modes):
                    raise ModeConfigError(f"coupler on modes {el.modes} out of range for {self.modes} modes")
                if not (0.0 <= el.tau <= 1.0):
                    raise ValueError(f"coupler transmissivity {el.tau} outside [0, 1]")
            elif isinstance(el, Phase):
                if not (0 <= el.mode < self.modes):
                    raise ModeConfigError(f"phase on mode {el.mode} out of range for {self.modes} modes")
                if not (0.0 <= el.phi < TWO_PI):
                    raise ValueError(f"phase {el.phi} outside [0, 2*pi)")
            else:
                raise TypeError(f"unknown circuit element {el!r}")

    def couplers(self) -> list[Coupler]:
        return [el for el in self.elements if isinstance(el, Coupler)]


def _wrap_phase(phi: float) -> float:
    phi = float(np.mod(phi, TWO_PI))
    # np.mod can round tiny negatives up to exactly 2*pi
    return 0.0 if phi >= TWO_PI else phi


def compose(c: Circuit, provenance: str = "circuit") -> Interferometer:
    return Interferometer(_compose_matrix(c), provenance=provenance, tol=ROUNDTRIP_TOL)


def random_phase_network(m: int, layers: int, seed, zero_phases: bool = False) -> Circuit:
    """Brick-wall mesh of balanced couplers with random phases.

    Each layer puts a uniformly drawn phase on every mode, then 50/50
    couplers on pairs (0,1), (2,3), ... for even layers and (1,2), (3,4), ...
    for odd layers. ``zero_phases`` keeps the structure but sets every phase
    to 0 (the random draws are still consumed).
    """
    if m < 2:
        raise DimensionError("random_phase_network needs m >= 2")
    if layers < 1:
        raise ValueError("random_phase_network needs layers >= 1")
    rng = np.random.default_rng(seed)
    elements: list[Element] = []
    for layer in range(layers):
        phis = rng.uniform(0.0, TWO_PI, size=m)
        for j in range(m):
            elements.append(Phase(j, 0.0 if zero_phases else _wrap_phase(phis[j])))
        for j in range(layer % 2, m - 1, 2):
            elements.append(Coupler(j, 0.5))
    return Circuit(m, tuple(elements))


def reck_decompose(u: Interferometer, tol: float = ROUNDTRIP_TOL) -> Circuit:
    """Triangular beam-splitter decomposition of a unitary.

    Works on ``V = conj(U)``: couplers with a preceding phase are applied to
    adjacent rows of V to null its lower triangle column by column, giving
    ``T_k ... T_1 V = D`` with D diagonal. Every element is a symmetric
    matrix, so transposing yields ``U = T_1 ... T_k conj(D)``: the circuit is
    the nulling sequence followed by one phase per mode.
    At most ``m(m-1)/2`` couplers are emitted; pairs whose entries are both
    already zero are skipped.
    """
    m = u.modes
    v = u.matrix.conj().copy()
    elements: list[Element] = []
    for col in range(m - 1):
        for row in range(m - 1, col, -1):
            top, bottom = v[row - 1, col], v[row, col]
            if abs(bottom) == 0.0:
                continue
            a_top, a_bot = abs(top) ** 2, abs(bottom) ** 2
            tau = a_top / (a_top + a_bot)
            # Row `row` after the unit: i*sqrt(1-tau)*e^{i phi}*top + sqrt(tau)*bottom = 0
            phi = np.angle(bottom) - (np.angle(top) if a_top > 0 else 0.0) + np.pi / 2
            phase = Phase(row - 1, _wrap_phase(phi))
            coupler = Coupler(row - 1, float(tau))
            v[row - 1, :] *= np.exp(1j * phase.phi)
            v[row - 1 : row + 1, :] = coupler.block() @ v[row - 1 : row + 1, :]
            v[row, col] = 0.0
            elements.extend((phase, coupler))
    diag = np.diag(v)
    for j in range(m):
        phi = _wrap_phase(-np.angle(diag[j]))
        if phi != 0.0:
            elements.append(Phase(j, phi))
    circuit = Circuit(m, tuple(elements))
    rebuilt = _compose_matrix(circuit)
    err = float(np.max(np.abs(rebuilt - u.matrix)))
    if err > tol:
        raise ConvergenceError(f"decomposition residual {err:.3e} exceeds {tol:g}; input is not unitary enough")
    return circuit


def _compose_matrix(c: Circuit) -> np.ndarray:
    u = np.eye(c.modes, dtype=complex)
    for el in c.elements:
        if isinstance(el, Phase):
            u[:, el.mode] *= np.exp(1j * el.phi)
        else:
            u[:, el.mode : el.mode + 2] = u[:, el.mode : el.mode + 2] @ el.block()
    return u


def permutation_unitary(perm: Sequence[int]) -> Interferometer:
    """Unitary sending input mode ``i`` to output mode ``perm[i]``."""
    m = len(perm)
    u = np.zeros((m, m), dtype=complex)
    for i, j in enumerate(perm):
        u[i, j] = 1.0
    return Interferometer(u, provenance=f"permutation({list(perm)})")

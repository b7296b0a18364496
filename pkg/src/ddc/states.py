"""Multiqubit pure states shared between M senders and one receiver.

Amplitude layout: the computational-basis index runs over parties in the
order (S_1, ..., S_M, R) with the receiver as the least significant bit, so
``amplitudes[idx]`` belongs to ``|s_1 s_2 ... s_M r>`` with
``idx = s_1 * 2^M + ... + s_M * 2 + r``.  Tracing out the receiver is then a
contiguous 2-block sum, see :func:`reduce_to_senders`.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream

NORM_ATOL = 1e-12
HERM_ATOL = 1e-12
EIG_FLOOR = -1e-10

#: three-tangle below this is treated as zero (W-class boundary)
TANGLE_EPS = 1e-8


class SloccClass(enum.Enum):
    GHZ_CLASS = "GHZ_CLASS"
    W_CLASS = "W_CLASS"


GHZ_CLASS = SloccClass.GHZ_CLASS
W_CLASS = SloccClass.W_CLASS


@dataclass(frozen=True)
class SystemShape:
    """M qubit senders plus a single qubit receiver."""

    num_senders: int
    local_dim: int = 2
    receiver_count: int = 1

    def __post_init__(self):
        if self.num_senders not in (1, 2, 3):
            raise ValueError(f"unsupported sender count {self.num_senders}")
        if self.local_dim != 2 or self.receiver_count != 1:
            raise ValueError("only qubit parties with a single receiver are supported")

    @property
    def num_parties(self) -> int:
        return self.num_senders + 1

    @property
    def sender_dim(self) -> int:
        """d^M, the classical alphabet limit."""
        return self.local_dim ** self.num_senders

    @property
    def total_dim(self) -> int:
        return self.local_dim ** self.num_parties

    @property
    def receiver_index(self) -> int:
        """Party index of the receiver (senders are 0..M-1)."""
        return self.num_senders


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over (S_1 ... S_M R)."""

    shape: SystemShape
    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.shape.total_dim,):
            raise ValueError(
                f"amplitude vector has length {amps.shape}, expected {self.shape.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")

    def as_tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per party."""
        return self.amplitudes.reshape((self.shape.local_dim,) * self.shape.num_parties)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    entries: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "dim", m.shape[0])
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(m - m.conj().T).max() > HERM_ATOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > HERM_ATOL:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < EIG_FLOOR:
            raise ValueError("density matrix has a significantly negative eigenvalue")


def _vector(dim: int) -> np.ndarray:
    return np.zeros(dim, dtype=complex)


def basis_index(shape: SystemShape, bits: tuple[int, ...]) -> int:
    """Index of |s_1 ... s_M r> in the amplitude vector."""
    idx = 0
    for b in bits:
        idx = 2 * idx + b
    return idx


def make_gghz(num_senders: int, alpha: float, mu: float = 0.0) -> PureState:
    """sqrt(alpha)|0...0> + sqrt(1-alpha) e^{i mu} |1...1> on M senders + receiver."""
    if num_senders not in (2, 3):
        raise ValueError(f"gGHZ family is defined here for 2 or 3 senders, got {num_senders}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    shape = SystemShape(num_senders)
    v = _vector(shape.total_dim)
    v[0] = math.sqrt(alpha)
    v[-1] = math.sqrt(1.0 - alpha) * np.exp(1j * mu)
    return PureState(shape, v, label=f"gghz(alpha={alpha:g}, mu={mu:g})")


def make_gw(alpha: float, beta: float) -> PureState:
    """sqrt(alpha)|001> + sqrt(beta)|010> + sqrt(1-alpha-beta)|100>."""
    if not 0.0 <= alpha <= 1.0 or not 0.0 <= beta <= 1.0:
        raise ValueError("alpha and beta must lie in [0, 1]")
    rest = 1.0 - alpha - beta
    if rest < -NORM_ATOL:
        raise ValueError(f"alpha + beta exceeds 1 by {-rest:.3e}")
    shape = SystemShape(2)
    v = _vector(8)
    v[basis_index(shape, (0, 0, 1))] = math.sqrt(alpha)
    v[basis_index(shape, (0, 1, 0))] = math.sqrt(beta)
    v[basis_index(shape, (1, 0, 0))] = math.sqrt(max(rest, 0.0))
    return PureState(shape, v, label=f"gw(alpha={alpha:g}, beta={beta:g})")


def make_ws(a: float) -> PureState:
    """sqrt(1-a)|W> + sqrt(a)|000>, a one-parameter W-class family."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    w = make_gw(1.0 / 3.0, 1.0 / 3.0).amplitudes
    v = math.sqrt(1.0 - a) * w
    v[0] += math.sqrt(a)
    return PureState(SystemShape(2), v, label=f"ws(a={a:g})")


def _weight_indices(num_parties: int, r: int) -> list[int]:
    # one slot per choice of excited parties, lexicographic: (1,0,0,0) -> |1000>
    out = []
    for excited in itertools.combinations(range(num_parties), r):
        idx = 0
        for p in range(num_parties):
            idx = 2 * idx + (1 if p in excited else 0)
        out.append(idx)
    return out


def make_dicke4(r: int, amplitudes) -> PureState:
    """Four-qubit state supported on Hamming-weight-r basis states.

    ``amplitudes`` holds one coefficient per permutation of r excited qubits
    among four, C(4, r) in total; the state is normalized after construction.
    r = 1 with four coefficients is the four-qubit gW family.
    """
    if r not in (1, 2):
        raise ValueError(f"r must be 1 or 2, got {r}")
    amps = np.asarray(amplitudes, dtype=complex)
    want = math.comb(4, r)
    if amps.shape != (want,):
        raise ValueError(f"expected {want} amplitudes for r={r}, got {amps.shape}")
    norm = np.linalg.norm(amps)
    if norm < 1e-12:
        raise ValueError("all-zero amplitude vector")
    shape = SystemShape(3)
    v = _vector(16)
    v[_weight_indices(4, r)] = amps / norm
    return PureState(shape, v, label=f"dicke4(r={r})")


def sample_haar_state(shape: SystemShape, seed: int) -> PureState:
    """Haar-uniform pure state: normalized i.i.d. complex Gaussian amplitudes."""
    rng = stream(seed)
    return _haar_from(rng, shape, label=f"haar(seed={seed})")


def _haar_from(rng: np.random.Generator, shape: SystemShape, label: str = "") -> PureState:
    v = rng.standard_normal(shape.total_dim) + 1j * rng.standard_normal(shape.total_dim)
    return PureState(shape, v / np.linalg.norm(v), label=label)


def sample_class(slocc: SloccClass, seed: int) -> PureState:
    """Random three-qubit state from one of the two genuinely entangled classes.

    GHZ-class draws ambient Haar states and rejects the (measure-zero) ones
    with vanishing three-tangle; W-class draws Haar-uniform coefficients in
    the canonical span {|000>, |100>, |010>, |001>}.
    """
    from .measures import three_tangle  # local import, measures depends on states

    shape = SystemShape(2)
    rng = stream(seed)
    if slocc is SloccClass.GHZ_CLASS:
        for _ in range(100):
            st = _haar_from(rng, shape, label=f"ghz_class(seed={seed})")
            if three_tangle(st) > TANGLE_EPS:
                return st
        raise RuntimeError("GHZ-class sampler rejected 100 consecutive draws; RNG broken?")
    if slocc is SloccClass.W_CLASS:
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x /= np.linalg.norm(x)
        v = _vector(8)
        v[basis_index(shape, (0, 0, 0))] = x[0]
        v[basis_index(shape, (1, 0, 0))] = x[1]
        v[basis_index(shape, (0, 1, 0))] = x[2]
        v[basis_index(shape, (0, 0, 1))] = x[3]
        return PureState(shape, v, label=f"w_class(seed={seed})")
    raise ValueError(f"unknown class {slocc!r}")


def reduce_to_senders(state: PureState) -> DensityMatrix:
    """Trace out the receiver: rho = tr_R |psi><psi|, a d^M x d^M matrix."""
    a = state.amplitudes.reshape(state.shape.sender_dim, state.shape.local_dim)
    rho = a @ a.conj().T
    return DensityMatrix(rho)


def reduced_density(state: PureState, keep: tuple[int, ...]) -> np.ndarray:
    """Reduced density matrix over the given party subset (bare ndarray)."""
    n = state.shape.num_parties
    keep = tuple(sorted(keep))
    drop = [p for p in range(n) if p not in keep]
    t = state.as_tensor()
    rho = np.tensordot(t, t.conj(), axes=(drop, drop))
    # tensordot leaves kept axes in party order for both ket and bra sides
    k = len(keep)
    return rho.reshape(2 ** k, 2 ** k)

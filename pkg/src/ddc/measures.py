"""Multipartite entanglement and capacity measures.

All entropies are in bits.  Conventions:

* ggm: 1 minus the largest squared Schmidt coefficient over all bipartitions
  of the parties (genuine multipartite entanglement; 0 for product states).
* negativity: (trace norm of the partial transpose - 1) / 2, on the full pure
  state or on a reduced marginal when the bipartition does not cover all
  parties.
* neg_sq_monogamy: N^2(node : rest) - sum_k N^2(node : k), node defaulting to
  the receiver.
* dc_capacity: M log2(d) + max{S(rho_R) - S(rho_full), 0}; the second term is
  S(rho_R) for pure states.
* three_tangle: 4 |Cayley hyperdeterminant| of the 2x2x2 amplitude tensor,
  1 on the GHZ state and 0 on the whole W class.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .states import PureState, reduced_density

ZERO_EIG = 1e-12


@dataclass(frozen=True)
class MeasureReport:
    ggm: float
    neg_sq_monogamy: float
    dc_capacity_bits: float
    three_tangle: float


def entropy_bits(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits; eigenvalues below 1e-12 contribute zero."""
    ev = np.linalg.eigvalsh(rho)
    ev = ev[ev > ZERO_EIG]
    return float(-(ev * np.log2(ev)).sum()) if ev.size else 0.0


def _bipartitions(n: int):
    """All bipartitions of n parties, one representative per unordered pair."""
    parties = list(range(n))
    for k in range(1, n // 2 + 1):
        for a in itertools.combinations(parties, k):
            if 2 * k == n and 0 not in a:
                continue  # avoid double counting equal-size cuts
            yield a, tuple(p for p in parties if p not in a)


def ggm(state: PureState) -> float:
    """1 - max over bipartitions of the largest squared Schmidt coefficient."""
    t = state.as_tensor()
    n = state.shape.num_parties
    worst = 0.0
    for a, _ in _bipartitions(n):
        rest = [p for p in range(n) if p not in a]
        m = np.moveaxis(t, a, range(len(a))).reshape(2 ** len(a), 2 ** len(rest))
        s = np.linalg.svd(m, compute_uv=False)
        worst = max(worst, float(s[0] ** 2))
    return 1.0 - worst


def negativity(state: PureState, part_a, part_b=None) -> float:
    """Negativity across (part_a : part_b), transposing the part_a subsystem.

    part_a/part_b are party index tuples; part_b defaults to the complement.
    When the union does not cover all parties the remaining parties are traced
    out first.
    """
    n = state.shape.num_parties
    part_a = tuple(sorted(part_a))
    if part_b is None:
        part_b = tuple(p for p in range(n) if p not in part_a)
    else:
        part_b = tuple(sorted(part_b))
    if set(part_a) & set(part_b):
        raise ValueError("bipartition halves overlap")
    if not part_a or not part_b:
        raise ValueError("bipartition halves must be non-empty")
    keep = tuple(sorted(part_a + part_b))
    rho = reduced_density(state, keep)
    ta = tuple(keep.index(p) for p in part_a)
    k = len(keep)
    rt = rho.reshape((2,) * (2 * k))
    # swap ket/bra axes of the transposed parties
    perm = list(range(2 * k))
    for p in ta:
        perm[p], perm[k + p] = perm[k + p], perm[p]
    rt = np.transpose(rt, perm).reshape(2 ** k, 2 ** k)
    ev = np.linalg.eigvalsh(rt)
    return float((np.abs(ev).sum() - 1.0) / 2.0)


def neg_sq_monogamy(state: PureState, node: int | None = None) -> float:
    """Squared-negativity monogamy score of a three-party state."""
    n = state.shape.num_parties
    if n != 3:
        raise ValueError("monogamy score is defined here for three parties")
    if node is None:
        node = state.shape.receiver_index
    others = [p for p in range(3) if p != node]
    total = negativity(state, (node,)) ** 2
    pairwise = sum(negativity(state, (node,), (k,)) ** 2 for k in others)
    return float(total - pairwise)


def dc_capacity(state: PureState) -> float:
    """Dense coding capacity in bits: M log2(d) + max{S(rho_R) - S(rho_full), 0}."""
    shape = state.shape
    classical = shape.num_senders * math.log2(shape.local_dim)
    rho_r = reduced_density(state, (shape.receiver_index,))
    return classical + max(entropy_bits(rho_r), 0.0)  # S(rho_full) = 0 for pure states


def three_tangle(state: PureState) -> float:
    """Normalized modulus of the Cayley hyperdeterminant of a 3-qubit state."""
    if state.shape.num_parties != 3:
        raise ValueError("three-tangle is defined for three qubits")
    return _tangle_from_amplitudes(state.amplitudes)


def _tangle_from_amplitudes(amps: np.ndarray) -> float:
    a = np.asarray(amps, dtype=complex).reshape(2, 2, 2)
    d1 = (
        a[0, 0, 0] ** 2 * a[1, 1, 1] ** 2
        + a[0, 0, 1] ** 2 * a[1, 1, 0] ** 2
        + a[0, 1, 0] ** 2 * a[1, 0, 1] ** 2
        + a[1, 0, 0] ** 2 * a[0, 1, 1] ** 2
    )
    d2 = (
        a[0, 0, 0] * a[1, 1, 1] * a[0, 1, 1] * a[1, 0, 0]
        + a[0, 0, 0] * a[1, 1, 1] * a[1, 0, 1] * a[0, 1, 0]
        + a[0, 0, 0] * a[1, 1, 1] * a[1, 1, 0] * a[0, 0, 1]
        + a[0, 1, 1] * a[1, 0, 0] * a[1, 0, 1] * a[0, 1, 0]
        + a[0, 1, 1] * a[1, 0, 0] * a[1, 1, 0] * a[0, 0, 1]
        + a[1, 0, 1] * a[0, 1, 0] * a[1, 1, 0] * a[0, 0, 1]
    )
    d3 = (
        a[0, 0, 0] * a[1, 1, 0] * a[1, 0, 1] * a[0, 1, 1]
        + a[1, 1, 1] * a[0, 0, 1] * a[0, 1, 0] * a[1, 0, 0]
    )
    return float(4.0 * abs(d1 - 2.0 * d2 + 4.0 * d3))


def measure_report(state: PureState, node: int | None = None) -> MeasureReport:
    """All measures of one state; 3-party-only quantities are NaN otherwise."""
    three_party = state.shape.num_parties == 3
    return MeasureReport(
        ggm=ggm(state),
        neg_sq_monogamy=neg_sq_monogamy(state, node) if three_party else math.nan,
        dc_capacity_bits=dc_capacity(state),
        three_tangle=three_tangle(state) if three_party else math.nan,
    )

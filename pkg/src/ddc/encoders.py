"""Per-sender SU(2) encoders and their orthogonality overlaps.

Each sender applies a determinant-one unitary

    U(theta, x, y) = [[cos(theta) e^{ix},  -sin(theta) e^{iy}],
                      [sin(theta) e^{-iy},  cos(theta) e^{-ix}]]

so a product encoding is one (theta, x, y) triple per sender.  Two product
encodings a, b are orthogonal on the senders' reduced state rho when the
overlap of the encoded global states vanishes:

    overlap(a, b) = tr(rho (U_a1 x ... x U_aM)^dag (U_b1 x ... x U_bM)) = 0.

The evaluation contracts factored per-sender 2x2 products against rho; the
explicit d^M x d^M construction is kept only as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, SystemShape

TWO_PI = 2.0 * math.pi


def _reduce_angles(theta: float, x: float, y: float) -> tuple[float, float, float]:
    # theta -> [0, pi] using U(-theta, x, y) = U(theta, x, y + pi)
    theta = theta % TWO_PI
    if theta > math.pi:
        theta = TWO_PI - theta
        y = y + math.pi
    return theta, x % TWO_PI, y % TWO_PI


@dataclass(frozen=True)
class Su2Params:
    """Angles of one sender's encoder, reduced to principal ranges."""

    theta: float
    x: float
    y: float

    def __post_init__(self):
        t, x, y = _reduce_angles(float(self.theta), float(self.x), float(self.y))
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


IDENTITY_PARAMS = Su2Params(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ProductEncoding:
    """One SU(2) triple per sender."""

    per_sender: tuple[Su2Params, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_sender", tuple(self.per_sender))

    @property
    def num_senders(self) -> int:
        return len(self.per_sender)


def identity_encoding(num_senders: int) -> ProductEncoding:
    return ProductEncoding((IDENTITY_PARAMS,) * num_senders)


@dataclass(frozen=True)
class EncodingSet:
    """Ordered list of product encodings; entry 0 is always the identity."""

    shape: SystemShape
    encodings: tuple[ProductEncoding, ...]

    def __post_init__(self):
        object.__setattr__(self, "encodings", tuple(self.encodings))
        if not self.encodings:
            raise ValueError("encoding set is empty")
        for enc in self.encodings:
            if enc.num_senders != self.shape.num_senders:
                raise ValueError("encoding sender count does not match the shape")
        first = self.encodings[0]
        if any(abs(p.theta) > 1e-12 or _phase_dist(p.x) > 1e-12 for p in first.per_sender):
            raise ValueError("encodings[0] must be the identity")
        if len(self.encodings) > self.shape.total_dim:
            raise ValueError(
                f"encoding set size {len(self.encodings)} exceeds d^(M+1) = {self.shape.total_dim}"
            )

    def __len__(self) -> int:
        return len(self.encodings)


def _phase_dist(x: float) -> float:
    # distance of a phase from 0 mod 2pi
    return min(x % TWO_PI, TWO_PI - (x % TWO_PI))


def su2_matrix(p: Su2Params) -> np.ndarray:
    """The 2x2 determinant-one matrix for one parameter triple."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    ex, ey = np.exp(1j * p.x), np.exp(1j * p.y)
    return np.array([[c * ex, -s * ey], [s / ey, c / ex]])


def su2_params_from_matrix(u: np.ndarray) -> Su2Params:
    """Invert :func:`su2_matrix` for any determinant-one 2x2 unitary."""
    z, w = u[0, 0], u[1, 0]
    theta = math.atan2(abs(w), abs(z))
    x = float(np.angle(z)) if abs(z) > 1e-15 else 0.0
    y = float(-np.angle(w)) if abs(w) > 1e-15 else 0.0
    return Su2Params(theta, x, y)


def encoding_matrices(enc: ProductEncoding) -> list[np.ndarray]:
    return [su2_matrix(p) for p in enc.per_sender]


def _rho_tensor(rho: DensityMatrix, num_senders: int) -> np.ndarray:
    m = rho.entries
    if m.shape[0] != 2 ** num_senders:
        raise ValueError(
            f"density matrix dimension {m.shape[0]} does not match {num_senders} senders"
        )
    return m.reshape((2,) * (2 * num_senders))


def _contract(rho_t: np.ndarray, ws: list[np.ndarray]) -> complex:
    # tr(rho (W_1 x ... x W_M)) with rho reshaped to one axis per ket/bra qubit
    m = len(ws)
    if m == 1:
        return complex(np.einsum("ab,ba->", rho_t, ws[0]))
    if m == 2:
        return complex(np.einsum("abcd,ca,db->", rho_t, ws[0], ws[1]))
    if m == 3:
        return complex(np.einsum("abcdef,da,eb,fc->", rho_t, ws[0], ws[1], ws[2]))
    raise ValueError(f"unsupported sender count {m}")


def pair_overlap(rho: DensityMatrix, a: ProductEncoding, b: ProductEncoding) -> complex:
    """Overlap of the two encoded states, tr(rho (x)_k U_ak^dag U_bk)."""
    if a.num_senders != b.num_senders:
        raise ValueError("encodings have different sender counts")
    rho_t = _rho_tensor(rho, a.num_senders)
    ws = [
        su2_matrix(pa).conj().T @ su2_matrix(pb)
        for pa, pb in zip(a.per_sender, b.per_sender)
    ]
    return _contract(rho_t, ws)


def residual_vector(rho: DensityMatrix, enc_set: EncodingSet) -> np.ndarray:
    """Re/Im of every pairwise overlap, i < j in lexicographic order.

    Length is N(N-1): two reals per orthogonality equation.  Zero exactly when
    all encoded states are mutually orthogonal.
    """
    encs = enc_set.encodings
    out: list[float] = []
    for i in range(len(encs)):
        for j in range(i + 1, len(encs)):
            g = pair_overlap(rho, encs[i], encs[j])
            out.append(g.real)
            out.append(g.imag)
    return np.array(out)

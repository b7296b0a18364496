"""One round of the deterministic dense coding protocol.

All parties know the shared state and the solved encoding set.  A message m
in [0, N) selects one joint product encoding: the senders' individual symbols
are the mixed-radix digits of m (leading sender major), and since the number
of encodings is generally smaller than a full product basis, the encoding is
correlated: a sender's unitary depends on the whole message, not only on its
own digit.  The receiver decodes by discriminating the N mutually orthogonal
encoded states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoders import EncodingSet, encoding_matrices
from .solver import verify_set
from .states import PureState, reduce_to_senders

CODEBOOK_TOL = 1e-5

#: decode margin below which discrimination is treated as ambiguous
AMBIGUITY_MARGIN = 1.0 - 1e-4


class ProtocolError(ValueError):
    pass


class AmbiguousDecoding(ProtocolError):
    pass


def alphabet_split(n: int, num_senders: int) -> tuple[int, ...]:
    """Per-sender symbol range sizes for an alphabet of n messages.

    Powers of two split into balanced binary blocks with the leading sender
    taking the surplus (8 -> (4, 2), 16 -> (4, 2, 2)).  n = 6 follows the
    bit-times-trit convention (2, 3).  Remaining sizes use radix 2 on the
    trailing senders with the leading sender absorbing the rest, e.g.
    5 -> (3, 2) where only the first five mixed-radix words are used.
    """
    if n < 1:
        raise ValueError("alphabet must have at least one message")
    if n & (n - 1) == 0:  # power of two
        bits = n.bit_length() - 1
        base, extra = divmod(bits, num_senders)
        split = [2 ** (base + (1 if k < extra else 0)) for k in range(num_senders)]
        return tuple(split)
    if n == 6 and num_senders == 2:
        return (2, 3)
    trailing = 2 ** (num_senders - 1)
    return (math.ceil(n / trailing),) + (2,) * (num_senders - 1)


def message_symbols(message: int, split: tuple[int, ...]) -> tuple[int, ...]:
    """Mixed-radix digits of a message, leading sender major."""
    digits = []
    rest = message
    for radix in reversed(split[1:]):
        rest, d = divmod(rest, radix)
        digits.append(d)
    digits.append(rest)
    return tuple(reversed(digits))


@dataclass(frozen=True)
class Codebook:
    state: PureState
    enc_set: EncodingSet
    encoded_states: np.ndarray  # (N, d^(M+1))
    split: tuple[int, ...]

    @property
    def num_messages(self) -> int:
        return len(self.enc_set)

    def symbols(self, message: int) -> tuple[int, ...]:
        return message_symbols(message, self.split)


def _apply_encoding(state: PureState, matrices) -> np.ndarray:
    t = state.as_tensor()
    for k, u in enumerate(matrices):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [k])), 0, k)
    return t.reshape(state.shape.total_dim)


def build_codebook(state: PureState, enc_set: EncodingSet) -> Codebook:
    """Encoded-state chart for one shared state and one solved encoding set."""
    rho = reduce_to_senders(state)
    check = verify_set(rho, enc_set, CODEBOOK_TOL)
    if not check.passed:
        raise ProtocolError(
            f"encoding set is not orthogonal on this state "
            f"(max |overlap| = {check.max_abs_overlap:.3e})"
        )
    encoded = np.stack(
        [_apply_encoding(state, encoding_matrices(enc)) for enc in enc_set.encodings]
    )
    split = alphabet_split(len(enc_set), state.shape.num_senders)
    return Codebook(state=state, enc_set=enc_set, encoded_states=encoded, split=split)


def run_round(cb: Codebook, message: int) -> int:
    """Encode, transmit, and decode one message; returns the decoded message."""
    n = cb.num_messages
    if not 0 <= message < n:
        raise ProtocolError(f"message {message} outside [0, {n})")
    received = cb.encoded_states[message]
    overlaps = np.abs(cb.encoded_states.conj() @ received) ** 2
    order = np.argsort(overlaps)
    decoded = int(order[-1])
    margin = float(overlaps[order[-1]] - overlaps[order[-2]]) if n > 1 else 1.0
    if margin < AMBIGUITY_MARGIN:
        raise AmbiguousDecoding(
            f"decoding margin {margin:.6f} below {AMBIGUITY_MARGIN}; "
            "codebook states are not orthogonal enough"
        )
    return decoded

"""Explicit orthogonal-encoding constructions for the gGHZ no-go results.

For a non-balanced two-term superposition state, orthogonality to the
identity forces at least one sender angle to pi/2, splitting the candidate
encoders into classes by which angles are pinned.  The tables below list the
maximal constructions case by case (angle variables only; phases are left to
the solver).  Every case tops out at d^M - 1 encodings beyond the identity,
i.e. exactly the classical limit.

Two senders: constructive cases 2 (two same-class encoders), 4 (two plus one
from the partner class) and 5 (one per class).  Three senders: cases 3
through 8, each listing seven encoders.  Free angles (u1, u2, v1, u3) default
to pi/3 and may be set to any value.
"""

from __future__ import annotations

import math

from .encoders import EncodingSet, ProductEncoding, Su2Params, identity_encoding
from .solver import (
    FeasibilityOutcome,
    SolverConfig,
    phase_mask,
    solve_with_mask,
)
from .states import DensityMatrix, SystemShape

HALF_PI = math.pi / 2.0

#: default instantiation of the tables' arbitrary angle variables
DEFAULT_FREE_ANGLE = math.pi / 3.0

TWO_SENDER_CASES = (2, 4, 5)
THREE_SENDER_CASES = (3, 4, 5, 6, 7, 8)


def _theta_rows_m2(case_id: int, t: float) -> list[list[tuple[float, ...]]]:
    if case_id == 2:
        return [
            [(HALF_PI, t), (HALF_PI, t - HALF_PI)],
            [(HALF_PI, t), (HALF_PI, t + HALF_PI)],
        ]
    if case_id == 4:
        return [[(HALF_PI, t), (HALF_PI, t - HALF_PI), (0.0, HALF_PI)]]
    if case_id == 5:
        return [[(HALF_PI, 0.0), (0.0, HALF_PI), (HALF_PI, HALF_PI)]]
    raise ValueError(f"unknown two-sender case {case_id}; valid: {TWO_SENDER_CASES}")


def _theta_rows_m3(case_id: int, u1: float, u2: float, v1: float, u3: float):
    quad = [
        (u1, u2, HALF_PI),
        (u1 - HALF_PI, u2, HALF_PI),
        (u1, u2 - HALF_PI, HALF_PI),
        (u1 - HALF_PI, u2 - HALF_PI, HALF_PI),
    ]
    if case_id == 3:
        return [quad + [(v1, HALF_PI, 0.0), (v1 - HALF_PI, HALF_PI, 0.0), (HALF_PI, 0.0, 0.0)]]
    if case_id == 4:
        return [quad + [(0.0, HALF_PI, 0.0), (HALF_PI, 0.0, 0.0), (HALF_PI, HALF_PI, 0.0)]]
    if case_id == 5:
        # the doubly-pinned member must sit on (pi/2, pi/2, 0): any choice
        # whose free slot collides with the u3 pair, e.g. (0, pi/2, pi/2),
        # leaves that pair a residual of sin(u3)|2a-1| no phase can cancel
        return [[
            (u1, 0.0, HALF_PI),
            (u1 - HALF_PI, 0.0, HALF_PI),
            (0.0, HALF_PI, u3),
            (0.0, HALF_PI, u3 - HALF_PI),
            (HALF_PI, 0.0, 0.0),
            (HALF_PI, HALF_PI, 0.0),
            (HALF_PI, HALF_PI, HALF_PI),
        ]]
    if case_id == 6:
        return [[
            (u1, 0.0, HALF_PI),
            (u1 - HALF_PI, 0.0, HALF_PI),
            (0.0, HALF_PI, 0.0),
            (HALF_PI, 0.0, 0.0),
            (0.0, HALF_PI, HALF_PI),
            (HALF_PI, HALF_PI, 0.0),
            (HALF_PI, HALF_PI, HALF_PI),
        ]]
    if case_id == 7:
        return [[
            (0.0, 0.0, HALF_PI),
            (0.0, HALF_PI, 0.0),
            (HALF_PI, 0.0, 0.0),
            (u1, HALF_PI, HALF_PI),
            (u1 - HALF_PI, HALF_PI, HALF_PI),
            (HALF_PI, 0.0, HALF_PI),
            (HALF_PI, HALF_PI, 0.0),
        ]]
    if case_id == 8:
        return [[
            (0.0, 0.0, HALF_PI),
            (0.0, HALF_PI, 0.0),
            (HALF_PI, 0.0, 0.0),
            (0.0, HALF_PI, HALF_PI),
            (HALF_PI, 0.0, HALF_PI),
            (HALF_PI, HALF_PI, 0.0),
            (HALF_PI, HALF_PI, HALF_PI),
        ]]
    raise ValueError(f"unknown three-sender case {case_id}; valid: {THREE_SENDER_CASES}")


def gghz_theorem_families(
    num_senders: int, case_id: int, free_angles: dict[str, float] | None = None
) -> list[EncodingSet]:
    """Tabulated angle configurations for one case, identity prepended.

    Phases are initialized to zero and are meant to be solved afterwards,
    see :func:`solve_case_phases`.
    """
    fa = {"t": DEFAULT_FREE_ANGLE, "u1": DEFAULT_FREE_ANGLE, "u2": DEFAULT_FREE_ANGLE,
          "v1": DEFAULT_FREE_ANGLE, "u3": DEFAULT_FREE_ANGLE}
    fa.update(free_angles or {})
    if num_senders == 2:
        tables = _theta_rows_m2(case_id, fa["t"])
    elif num_senders == 3:
        tables = _theta_rows_m3(case_id, fa["u1"], fa["u2"], fa["v1"], fa["u3"])
    else:
        raise ValueError("theorem tables exist for 2 or 3 senders")
    shape = SystemShape(num_senders)
    out = []
    for rows in tables:
        encodings = [identity_encoding(num_senders)]
        for thetas in rows:
            encodings.append(
                ProductEncoding(tuple(Su2Params(th, 0.0, 0.0) for th in thetas))
            )
        out.append(EncodingSet(shape, tuple(encodings)))
    return out


def solve_case_phases(
    rho: DensityMatrix, table: EncodingSet, cfg: SolverConfig
) -> FeasibilityOutcome:
    """Solve the free phases of a tabulated case, angles kept frozen."""
    return solve_with_mask(rho, table, phase_mask(table), cfg, rng_path=(len(table), 1))


def extend_case_infeasible(
    rho: DensityMatrix, table: EncodingSet, cfg: SolverConfig
) -> FeasibilityOutcome:
    """Try to append one fully free encoding to a tabulated case.

    Angles of the tabulated encodings stay frozen, their phases stay free,
    and the appended encoding is entirely free.  INFEASIBLE corroborates that
    the construction is maximal.
    """
    shape = table.shape
    extended = EncodingSet(
        shape, table.encodings + (identity_encoding(shape.num_senders),)
    )
    n = len(extended)
    mask = phase_mask(extended)
    mask[n - 1] = True
    return solve_with_mask(rho, extended, mask, cfg, rng_path=(n, 2))

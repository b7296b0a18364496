"""Feasibility search for mutually orthogonal local encodings.

Deciding whether N product encodings can be made pairwise orthogonal on a
given senders' state rho is a nonlinear least-squares feasibility problem:
minimize F = sum_{i<j} |overlap_ij|^2 over the encoder parameters (encoding 0
pinned to the identity) and accept when every |overlap| falls below the
configured tolerance.  A Levenberg-Marquardt loop with analytic Jacobians is
restarted from random initial points; INFEASIBLE is a heuristic verdict after
the restart budget is exhausted.

Internally the search runs over unit-quaternion coordinates for each sender
unitary (a redundancy-free smooth chart of SU(2)); solved encoders are
converted to the public (theta, x, y) parametrization on success.  The
(theta, x, y) chart itself is kept for structured solves where specific
angles are frozen and only phases are optimized.

``compute_nmax`` scans N upward from the classical limit d^M + 1 and also
applies an exact information bound: N orthogonal encoded states force
log2(N) <= M + S(rho_R) (subadditivity of entropy of their uniform mixture),
so any N above that bound is infeasible with certainty and is not searched.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .encoders import (
    EncodingSet,
    ProductEncoding,
    Su2Params,
    identity_encoding,
    pair_overlap,
    su2_params_from_matrix,
)
from .measures import entropy_bits
from .rng import stream
from .states import DensityMatrix, PureState, SystemShape, reduce_to_senders

log = logging.getLogger(__name__)

# U = q0*I + q1*(i sx) + q2*(i sy) + q3*(i sz), unit quaternions <-> SU(2)
_QUAT_BASIS = np.array(
    [
        [[1.0, 0.0], [0.0, 1.0]],
        [[0.0, 1.0j], [1.0j, 0.0]],
        [[0.0, 1.0], [-1.0, 0.0]],
        [[1.0j, 0.0], [0.0, -1.0j]],
    ],
    dtype=complex,
)

_IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

_EYE4 = np.eye(4)[None, None, None]


class Status(enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-5
    restarts: int = 50
    max_iterations: int = 2000
    seed: int = 0
    scan_order: str = "ASCENDING"
    use_capacity_bound: bool = True
    stagnation_window: int = 25
    stagnation_eps: float = 1e-12
    stagnation_rel: float = 1e-3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.scan_order != "ASCENDING":
            raise ValueError("only ASCENDING scan order is supported")


@dataclass(frozen=True)
class FeasibilityOutcome:
    """Verdict of one fixed-N search."""

    status: Status
    best_residual: float  # smallest max|overlap| reached over all restarts
    restarts_used: int
    solution: EncodingSet | None = None
    by_capacity_bound: bool = False

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


@dataclass(frozen=True)
class DdcResult:
    n_max: int
    per_n_evidence: dict[int, FeasibilityOutcome]
    seed: int

    def best_solution(self) -> EncodingSet | None:
        """Solved set for the largest feasible N, if one was solved."""
        for n in sorted(self.per_n_evidence, reverse=True):
            out = self.per_n_evidence[n]
            if out.feasible and out.solution is not None:
                return out.solution
        return None


@dataclass(frozen=True)
class VerifyResult:
    max_abs_overlap: float
    passed: bool


# ---------------------------------------------------------------------------
# pairwise-overlap system with analytic Jacobians


class _PairSystem:
    """Vectorized evaluation of all pairwise overlaps and their derivatives."""

    def __init__(self, rho: np.ndarray, num_senders: int, n: int):
        self.m = num_senders
        self.n = n
        self.rho_t = np.ascontiguousarray(rho.reshape((2,) * (2 * num_senders)))
        self.ii, self.jj = np.triu_indices(n, k=1)
        self.npairs = len(self.ii)

    def _contract(self, ws):
        m = self.m
        if m == 1:
            return np.einsum("ab,pba->p", self.rho_t, ws[0])
        if m == 2:
            return np.einsum("abcd,pca,pdb->p", self.rho_t, ws[0], ws[1])
        return np.einsum("abcdef,pda,peb,pfc->p", self.rho_t, ws[0], ws[1], ws[2])

    def _contract_d(self, ws, k, t):
        # t: (P, Q, 2, 2) replaces sender k's factor; returns (P, Q)
        m = self.m
        if m == 1:
            return np.einsum("ab,pqba->pq", self.rho_t, t)
        if m == 2:
            if k == 0:
                return np.einsum("abcd,pqca,pdb->pq", self.rho_t, t, ws[1])
            return np.einsum("abcd,pca,pqdb->pq", self.rho_t, ws[0], t)
        if k == 0:
            return np.einsum("abcdef,pqda,peb,pfc->pq", self.rho_t, t, ws[1], ws[2])
        if k == 1:
            return np.einsum("abcdef,pda,pqeb,pfc->pq", self.rho_t, ws[0], t, ws[2])
        return np.einsum("abcdef,pda,peb,pqfc->pq", self.rho_t, ws[0], ws[1], t)

    def gram(self, u: np.ndarray) -> np.ndarray:
        """Pairwise overlaps for per-encoding unitaries u of shape (N, M, 2, 2)."""
        ui, uj = u[self.ii], u[self.jj]
        w = np.einsum("pmca,pmcb->pmab", ui.conj(), uj)
        return self._contract([w[:, k] for k in range(self.m)])

    def gram_jac(self, u: np.ndarray, du: np.ndarray):
        """Overlaps plus derivatives wrt per-encoding parameters.

        du has shape (N, M, Q, 2, 2); the returned dG has shape (P, N, M, Q).
        """
        q = du.shape[2]
        ui, uj = u[self.ii], u[self.jj]
        w = np.einsum("pmca,pmcb->pmab", ui.conj(), uj)
        ws = [w[:, k] for k in range(self.m)]
        g = self._contract(ws)
        dg = np.zeros((self.npairs, self.n, self.m, q), dtype=complex)
        rows = np.arange(self.npairs)[:, None]
        cols = np.arange(q)[None, :]
        for k in range(self.m):
            tj = np.einsum("pca,pqcb->pqab", ui[:, k].conj(), du[self.jj, k])
            ti = np.einsum("pqca,pcb->pqab", du[self.ii, k].conj(), uj[:, k])
            dg[rows, self.jj[:, None], k, cols] += self._contract_d(ws, k, tj)
            dg[rows, self.ii[:, None], k, cols] += self._contract_d(ws, k, ti)
        return g, dg


def _quat_to_u(qn: np.ndarray) -> np.ndarray:
    return np.einsum("nma,aij->nmij", qn, _QUAT_BASIS)


def _angles_to_u(params: np.ndarray) -> np.ndarray:
    th, x, y = params[..., 0], params[..., 1], params[..., 2]
    c, s = np.cos(th), np.sin(th)
    ex, ey = np.exp(1j * x), np.exp(1j * y)
    u = np.empty(params.shape[:-1] + (2, 2), dtype=complex)
    u[..., 0, 0] = c * ex
    u[..., 0, 1] = -s * ey
    u[..., 1, 0] = s / ey
    u[..., 1, 1] = c / ex
    return u


def _angles_du(params: np.ndarray) -> np.ndarray:
    th, x, y = params[..., 0], params[..., 1], params[..., 2]
    c, s = np.cos(th), np.sin(th)
    ex, ey = np.exp(1j * x), np.exp(1j * y)
    d = np.zeros(params.shape[:-1] + (3, 2, 2), dtype=complex)
    d[..., 0, 0, 0] = -s * ex
    d[..., 0, 0, 1] = -c * ey
    d[..., 0, 1, 0] = c / ey
    d[..., 0, 1, 1] = -s / ex
    d[..., 1, 0, 0] = 1j * c * ex
    d[..., 1, 1, 1] = -1j * c / ex
    d[..., 2, 0, 1] = -1j * s * ey
    d[..., 2, 1, 0] = 1j * s / ey
    return d


# ---------------------------------------------------------------------------
# Levenberg-Marquardt core


@dataclass
class _LmOutcome:
    converged: bool
    x: np.ndarray
    max_abs_overlap: float
    iterations: int


def _lm(eval_rj, eval_r, x0: np.ndarray, tol: float, cfg: SolverConfig) -> _LmOutcome:
    """Damped least-squares on r(x); success when max |overlap| < tol.

    eval_rj returns (r, J); eval_r just r.  Overlap p is r[p] + i r[P + p].
    A restart is abandoned when no damped step improves the cost, or when the
    residual norm stalls over a ``stagnation_window`` of iterations: absolute
    progress below ``stagnation_eps``, or relative progress below
    ``stagnation_rel`` while still far (10x tolerance) from success.  The
    relative rule kills the long plateau creep that infeasible instances
    exhibit; converging runs blow through it because the zero-residual basin
    is quadratically attractive.
    """
    x = x0.copy()
    r, jac = eval_rj(x)
    cost = float(r @ r)
    lam = 1e-3
    norms = [math.sqrt(cost)]
    it = 0
    while it < cfg.max_iterations:
        it += 1
        maxabs = _max_overlap(r)
        if maxabs < tol:
            return _LmOutcome(True, x, maxabs, it)
        g = jac.T @ r
        h = jac.T @ jac
        dia = np.maximum(np.diag(h), 1e-12)
        accepted = False
        for _ in range(12):
            try:
                step = np.linalg.solve(h + lam * np.diag(dia), -g)
            except np.linalg.LinAlgError:
                lam *= 8.0
                continue
            x_new = x + step
            r_new = eval_r(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam * 0.1, 1e-14)
                accepted = True
                break
            lam *= 8.0
            if lam > 1e13:
                break
        if not accepted:
            return _LmOutcome(_max_overlap(r) < tol, x, _max_overlap(r), it)
        norms.append(math.sqrt(cost))
        if len(norms) > cfg.stagnation_window:
            drop = norms[-cfg.stagnation_window - 1] - norms[-1]
            if drop < cfg.stagnation_eps:
                return _LmOutcome(_max_overlap(r) < tol, x, _max_overlap(r), it)
            if drop < cfg.stagnation_rel * norms[-1] and _max_overlap(r) > 10.0 * tol:
                return _LmOutcome(False, x, _max_overlap(r), it)
        r, jac = eval_rj(x)
    return _LmOutcome(_max_overlap(r) < tol, x, _max_overlap(r), it)


def _max_overlap(r: np.ndarray) -> float:
    half = r.size // 2
    return float(np.hypot(r[:half], r[half:]).max()) if half else 0.0


def _split_ri(g: np.ndarray) -> np.ndarray:
    return np.concatenate([g.real, g.imag])


# ---------------------------------------------------------------------------
# fixed-N feasibility in quaternion coordinates, all restarts in lockstep
#
# Every restart is an independent LM trajectory, but they share each numpy
# call: residuals, Jacobians and damped solves carry a leading restart axis.
# Batch membership never leaks between rows, so each trajectory is a pure
# function of its own starting point and the verdict matches a sequential
# run: the winning restart is the lowest-indexed one that converges, and once
# some restart converges only lower-indexed rows keep running.


class _BatchState:
    __slots__ = ("x", "res", "cost", "lam", "need_jac", "grad", "hess",
                 "active", "converged", "final_maxabs", "hist")

    def __init__(self, x0: np.ndarray, window: int):
        r = x0.shape[0]
        self.x = x0
        self.res = None
        self.cost = np.full(r, np.inf)
        self.lam = np.full(r, 1e-3)
        self.need_jac = np.ones(r, dtype=bool)
        self.grad = None
        self.hess = None
        self.active = np.ones(r, dtype=bool)
        self.converged = np.zeros(r, dtype=bool)
        self.final_maxabs = np.full(r, np.inf)
        self.hist = np.full((r, window + 1), np.inf)


class _QuatBatch:
    """Shared-call evaluation of many restarts of one fixed-N problem.

    All contractions are two-operand einsums (plain C loops), so each restart
    row of every result is bitwise independent of which other rows happen to
    share the batch.  Sender-k "environments" (rho contracted with every
    other sender's factor) are built once and reused for the value and for
    both derivative sides.
    """

    def __init__(self, sys: _PairSystem, cfg: SolverConfig):
        self.sys = sys
        self.cfg = cfg
        n, m = sys.n, sys.m
        free = np.zeros((n, m, 4), dtype=bool)
        free[1:] = True
        self.flat_free = free.reshape(-1)
        self.nf = int(self.flat_free.sum())
        self._prow = np.arange(sys.npairs)[:, None]
        self._qcol = np.arange(4)[None, :]

    def unpack(self, x: np.ndarray) -> np.ndarray:
        r = x.shape[0]
        q = np.zeros((r, self.sys.n, self.sys.m, 4))
        q[:, 0] = _IDENTITY_QUAT
        q.reshape(r, -1)[:, self.flat_free] = x
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    def _pair_w(self, x: np.ndarray):
        qn = self.unpack(x)
        u = np.einsum("rnma,aij->rnmij", qn, _QUAT_BASIS)
        ui, uj = u[:, self.sys.ii], u[:, self.sys.jj]
        w = np.einsum("rpmca,rpmcb->rpmab", ui.conj(), uj)
        return qn, ui, uj, w

    def evaluate(self, x: np.ndarray):
        """Residuals plus the intermediates the Jacobian needs."""
        qn, ui, uj, w = self._pair_w(x)
        envs, g = self._environments(w)
        res = np.concatenate([g.real, g.imag], axis=1)
        return res, (qn, ui, uj, envs)

    def jac_from_cache(self, cache):
        sys_ = self.sys
        qn, ui, uj, envs = cache
        r, p, n, m = qn.shape[0], sys_.npairs, sys_.n, sys_.m
        dg = np.zeros((r, p, n, m, 4), dtype=complex)
        for k in range(m):
            dwj = np.einsum("rpca,qcb->rpqab", ui[:, :, k].conj(), _QUAT_BASIS)
            dwi = np.einsum("qca,rpcb->rpqab", _QUAT_BASIS.conj(), uj[:, :, k])
            dg[:, self._prow, sys_.jj[:, None], k, self._qcol] += np.einsum(
                "rpac,rpqca->rpq", envs[k], dwj
            )
            dg[:, self._prow, sys_.ii[:, None], k, self._qcol] += np.einsum(
                "rpac,rpqca->rpq", envs[k], dwi
            )
        proj = _EYE4 - qn[..., :, None] * qn[..., None, :]
        dg = np.einsum("rpnma,rnmab->rpnmb", dg, proj)
        jc = dg.reshape(r, p, -1)[:, :, self.flat_free]
        return np.concatenate([jc.real, jc.imag], axis=1)

    def _environments(self, w):
        """Per-sender environments E_k and the overlap values G."""
        rho_t, m = self.sys.rho_t, self.sys.m
        if m == 1:
            envs = [np.broadcast_to(rho_t, w.shape[:2] + rho_t.shape)]
            g = np.einsum("rpab,rpba->rp", envs[0], w[:, :, 0])
            return envs, g
        if m == 2:
            e1 = np.einsum("abcd,rpdb->rpac", rho_t, w[:, :, 1])
            e2 = np.einsum("abcd,rpca->rpbd", rho_t, w[:, :, 0])
            g = np.einsum("rpac,rpca->rp", e1, w[:, :, 0])
            return [e1, e2], g
        t3 = np.einsum("abcdef,rpfc->rpabde", rho_t, w[:, :, 2])
        e1 = np.einsum("rpabde,rpeb->rpad", t3, w[:, :, 1])
        e2 = np.einsum("rpabde,rpda->rpbe", t3, w[:, :, 0])
        t1 = np.einsum("abcdef,rpda->rpbcef", rho_t, w[:, :, 0])
        e3 = np.einsum("rpbcef,rpeb->rpcf", t1, w[:, :, 1])
        g = np.einsum("rpad,rpda->rp", e1, w[:, :, 0])
        return [e1, e2, e3], g

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(x)[0]


def _batch_maxabs(res: np.ndarray) -> np.ndarray:
    half = res.shape[1] // 2
    return np.hypot(res[:, :half], res[:, half:]).max(axis=1)


def _run_quat_batch(
    sys: _PairSystem,
    cfg: SolverConfig,
    rng_path: tuple[int, ...],
    restart_indices: np.ndarray,
    early_stop: bool = True,
):
    """Drive the given restarts in lockstep; returns (converged_flags,
    winner_x, best_maxabs, winner_position) with positions relative to
    ``restart_indices``."""
    batch = _QuatBatch(sys, cfg)
    nrestarts = len(restart_indices)
    x0 = np.stack([
        stream(cfg.seed, *rng_path, int(r)).standard_normal(batch.nf)
        for r in restart_indices
    ])
    st = _BatchState(x0, cfg.stagnation_window)
    res0, cache0 = batch.evaluate(st.x)
    st.res = res0
    st.cost = np.einsum("rp,rp->r", st.res, st.res)
    cache = _FullCache(nrestarts, cache0)
    winner_x = None
    winner = None
    tol = cfg.tolerance
    window = cfg.stagnation_window
    eye_nf = np.eye(batch.nf)

    for it in range(cfg.max_iterations):
        idx = np.flatnonzero(st.active)
        if idx.size == 0:
            break
        refresh = idx[st.need_jac[idx]]
        if refresh.size:
            jac_f = batch.jac_from_cache(cache.rows(refresh))
            if st.grad is None:
                st.grad = np.zeros((nrestarts, batch.nf))
                st.hess = np.zeros((nrestarts, batch.nf, batch.nf))
            st.grad[refresh] = np.einsum("rpi,rp->ri", jac_f, st.res[refresh])
            st.hess[refresh] = np.matmul(jac_f.transpose(0, 2, 1), jac_f)
            st.need_jac[refresh] = False
        h = st.hess[idx]
        dia = np.maximum(np.einsum("rii->ri", h), 1e-12)
        damped = h + (st.lam[idx, None, None] * dia[:, :, None]) * eye_nf
        try:
            step = np.linalg.solve(damped, -st.grad[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([
                _safe_solve(damped[t], -st.grad[idx][t]) for t in range(idx.size)
            ])
        x_trial = st.x[idx] + step
        res_trial, cache_trial = batch.evaluate(x_trial)
        cost_trial = np.einsum("rp,rp->r", res_trial, res_trial)
        improved = cost_trial < st.cost[idx]

        acc = idx[improved]
        rej = idx[~improved]
        st.x[acc] = x_trial[improved]
        st.res[acc] = res_trial[improved]
        st.cost[acc] = cost_trial[improved]
        st.lam[acc] = np.maximum(st.lam[acc] * 0.1, 1e-14)
        st.need_jac[acc] = True
        cache.store(acc, cache_trial, improved)
        st.lam[rej] *= 8.0

        maxabs = _batch_maxabs(st.res[idx])
        st.final_maxabs[idx] = maxabs
        conv_now = idx[maxabs < tol]
        stop_now = np.zeros(nrestarts, dtype=bool)
        stop_now[conv_now] = True

        # stagnation bookkeeping on the shared iteration clock
        slot = it % (window + 1)
        norms = np.sqrt(st.cost[idx])
        if it > window:
            drop = st.hist[idx, slot] - norms
            stalled = (drop < cfg.stagnation_eps) | (
                (drop < cfg.stagnation_rel * norms) & (maxabs > 10.0 * tol)
            )
            stop_now[idx[stalled]] = True
        st.hist[idx, slot] = norms
        # a fully damped rejection means a local minimum to working precision
        stop_now[rej[st.lam[rej] > 1e13]] = True

        if conv_now.size:
            st.converged[conv_now] = True
            lowest = int(conv_now.min())
            if winner is None or lowest < winner:
                winner = lowest
                winner_x = st.x[lowest].copy()
            if early_stop:
                st.active[np.arange(nrestarts) > winner] = False
        st.active[stop_now] = False

    return st.converged, winner_x, float(st.final_maxabs.min()), winner


class _FullCache:
    """Per-restart evaluation intermediates, persisted across iterations."""

    def __init__(self, nrestarts: int, first: tuple):
        self.arrays = []
        for a in first:
            if isinstance(a, list):
                self.arrays.append([self._grow(x, nrestarts) for x in a])
            else:
                self.arrays.append(self._grow(a, nrestarts))

    @staticmethod
    def _grow(a: np.ndarray, nrestarts: int) -> np.ndarray:
        out = np.empty((nrestarts,) + a.shape[1:], dtype=a.dtype)
        out[: a.shape[0]] = a
        return out

    def rows(self, idx: np.ndarray) -> tuple:
        out = []
        for a in self.arrays:
            if isinstance(a, list):
                out.append([x[idx] for x in a])
            else:
                out.append(a[idx])
        return tuple(out)

    def store(self, rows: np.ndarray, trial_cache: tuple, trial_mask: np.ndarray):
        for a, t in zip(self.arrays, trial_cache):
            if isinstance(a, list):
                for ax, tx in zip(a, t):
                    ax[rows] = tx[trial_mask]
            else:
                a[rows] = t[trial_mask]


def _safe_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(a, b, rcond=None)[0]


def _restart_blocks(total: int) -> list[np.ndarray]:
    """Escalating block sizes: feasible instances converge on the first
    restart almost always, so start alone and batch the stubborn tail."""
    sizes = []
    remaining = total
    for s in (1, 3, 8):
        if remaining <= 0:
            break
        take = min(s, remaining)
        sizes.append(take)
        remaining -= take
    if remaining > 0:
        sizes.append(remaining)
    blocks = []
    start = 0
    for s in sizes:
        blocks.append(np.arange(start, start + s))
        start += s
    return blocks


def _quat_search(
    sys: _PairSystem, cfg: SolverConfig, rng_path: tuple[int, ...]
) -> FeasibilityOutcome:
    best_maxabs = math.inf
    for block in _restart_blocks(cfg.restarts):
        _, winner_x, block_best, winner = _run_quat_batch(sys, cfg, rng_path, block)
        best_maxabs = min(best_maxabs, block_best)
        if winner is not None:
            batch = _QuatBatch(sys, cfg)
            qn = batch.unpack(winner_x[None])[0]
            solution = _extract_encoding_set(qn, sys)
            res = batch.residual(winner_x[None])
            return FeasibilityOutcome(
                Status.FEASIBLE,
                float(_batch_maxabs(res)[0]),
                int(block[winner]) + 1,
                solution,
            )
    return FeasibilityOutcome(Status.INFEASIBLE, best_maxabs, cfg.restarts)


def _extract_encoding_set(qn: np.ndarray, sys: _PairSystem) -> EncodingSet:
    shape = SystemShape(sys.m)
    u = _quat_to_u(qn)
    encodings = [identity_encoding(sys.m)]
    for i in range(1, sys.n):
        encodings.append(
            ProductEncoding(tuple(su2_params_from_matrix(u[i, k]) for k in range(sys.m)))
        )
    return EncodingSet(shape, tuple(encodings))


def _encoding_params(enc_set: EncodingSet) -> np.ndarray:
    out = np.zeros((len(enc_set), enc_set.shape.num_senders, 3))
    for i, enc in enumerate(enc_set.encodings):
        for k, p in enumerate(enc.per_sender):
            out[i, k] = (p.theta, p.x, p.y)
    return out


# ---------------------------------------------------------------------------
# public operations


def find_orthogonal_set(rho: DensityMatrix, n: int, cfg: SolverConfig) -> FeasibilityOutcome:
    """Search for n mutually orthogonal encodings on rho (identity included)."""
    num_senders = _senders_from_rho(rho)
    lo, hi = 2 ** num_senders, 2 ** (num_senders + 1)
    if not lo <= n <= hi:
        raise ValueError(f"n = {n} outside the valid range [{lo}, {hi}]")
    sys = _PairSystem(rho.entries, num_senders, n)
    out = _quat_search(sys, cfg, rng_path=(n,))
    if out.feasible and out.solution is not None:
        check = verify_set(rho, out.solution, cfg.tolerance)
        if not check.passed:  # conversion drift pushed it over: treat as miss
            return FeasibilityOutcome(Status.INFEASIBLE, check.max_abs_overlap, out.restarts_used)
        out = replace(out, best_residual=check.max_abs_overlap)
    return out


def _senders_from_rho(rho: DensityMatrix) -> int:
    m = int(round(math.log2(rho.dim)))
    if 2 ** m != rho.dim or m not in (1, 2, 3):
        raise ValueError(f"density matrix dimension {rho.dim} is not 2^M for M in 1..3")
    return m


def capacity_bound_bits(rho: DensityMatrix, num_senders: int) -> float:
    """Exact upper bound on log2(N): M + S(rho_R) (= M + S(rho_S) for pure states)."""
    return num_senders + entropy_bits(rho.entries)


def compute_nmax(state: PureState, cfg: SolverConfig) -> DdcResult:
    """Largest N with a feasible orthogonal encoding set, scanning upward.

    The classical limit d^M is the defined floor and is not searched.  The
    scan stops at the first INFEASIBLE N, except that d^(M+1) is still tried
    directly when d^(M+1) - 1 fails, so a hard quantum-limit state is never
    masked by the (conjecturally always infeasible) d^(M+1) - 1 step.
    """
    rho = reduce_to_senders(state)
    m = state.shape.num_senders
    lo, hi = state.shape.sender_dim, state.shape.total_dim
    cap_bits = capacity_bound_bits(rho, m)
    evidence: dict[int, FeasibilityOutcome] = {}
    n_max = lo
    n = lo + 1
    while n <= hi:
        if cfg.use_capacity_bound and math.log2(n) > cap_bits + 1e-9:
            outcome = FeasibilityOutcome(
                Status.INFEASIBLE, math.inf, 0, by_capacity_bound=True
            )
        else:
            outcome = find_orthogonal_set(rho, n, cfg)
        evidence[n] = outcome
        if outcome.feasible:
            n_max = n
            n += 1
        elif n == hi - 1:
            n = hi  # do not let a d^(M+1)-1 failure mask d^(M+1)
        else:
            break
    if n_max == hi - 1:
        log.warning(
            "n_max = %d = d^(M+1) - 1 found (state %s): this contradicts the "
            "expected exclusion of that value and deserves independent scrutiny",
            n_max,
            state.label or "<unlabeled>",
        )
    return DdcResult(n_max=n_max, per_n_evidence=evidence, seed=cfg.seed)


def verify_set(rho: DensityMatrix, enc_set: EncodingSet, tol: float) -> VerifyResult:
    """Recompute every pairwise overlap directly and compare against tol."""
    encs = enc_set.encodings
    worst = 0.0
    for i in range(len(encs)):
        for j in range(i + 1, len(encs)):
            worst = max(worst, abs(pair_overlap(rho, encs[i], encs[j])))
    return VerifyResult(max_abs_overlap=worst, passed=worst < tol)


def convergence_profile(
    rho: DensityMatrix, n: int, cfg: SolverConfig
) -> list[bool]:
    """Run every restart to completion and report which ones converged.

    Diagnostic for the observed all-or-nothing convergence behaviour; not used
    by the scanning logic.  Restart trajectories are identical to those of
    :func:`find_orthogonal_set` (same streams, same updates); this just never
    stops early.
    """
    num_senders = _senders_from_rho(rho)
    sys = _PairSystem(rho.entries, num_senders, n)
    converged, _, _, _ = _run_quat_batch(
        sys, cfg, (n,), np.arange(cfg.restarts), early_stop=False
    )
    return [bool(c) for c in converged]


# ---------------------------------------------------------------------------
# structured solves: fixed angles, free phases


def solve_with_mask(
    rho: DensityMatrix,
    base: EncodingSet,
    free_mask: np.ndarray,
    cfg: SolverConfig,
    rng_path: tuple[int, ...] = (0,),
) -> FeasibilityOutcome:
    """LM over the masked subset of (theta, x, y) parameters of ``base``.

    free_mask has shape (N, M, 3); True entries are optimized, the rest stay
    at their tabulated values.  Free thetas are initialized uniformly in
    [0, pi], free phases uniformly in [0, 2 pi).
    """
    num_senders = _senders_from_rho(rho)
    n = len(base)
    sys = _PairSystem(rho.entries, num_senders, n)
    base_params = _encoding_params(base)
    free_mask = np.asarray(free_mask, dtype=bool)
    if free_mask.shape != base_params.shape:
        raise ValueError("free mask shape does not match the encoding set")
    if free_mask[0].any():
        raise ValueError("encoding 0 is pinned to the identity")
    flat_free = free_mask.reshape(-1)

    def unpack(x):
        p = base_params.copy()
        p.reshape(-1)[flat_free] = x
        return p

    def eval_r(x):
        return _split_ri(sys.gram(_angles_to_u(unpack(x))))

    def eval_rj(x):
        p = unpack(x)
        g, dg = sys.gram_jac(_angles_to_u(p), _angles_du(p))
        jc = dg.reshape(sys.npairs, -1)[:, flat_free]
        return _split_ri(g), np.concatenate([jc.real, jc.imag])

    is_theta = np.zeros(free_mask.shape, dtype=bool)
    is_theta[..., 0] = True
    theta_cols = is_theta.reshape(-1)[flat_free]

    best = math.inf
    for restart in range(cfg.restarts):
        rng = stream(cfg.seed, *rng_path, restart)
        x0 = rng.uniform(0.0, 2.0 * math.pi, int(flat_free.sum()))
        x0[theta_cols] = rng.uniform(0.0, math.pi, int(theta_cols.sum()))
        out = _lm(eval_rj, eval_r, x0, cfg.tolerance, cfg)
        best = min(best, out.max_abs_overlap)
        if out.converged:
            solution = _params_to_set(unpack(out.x), num_senders)
            return FeasibilityOutcome(
                Status.FEASIBLE, out.max_abs_overlap, restart + 1, solution
            )
    return FeasibilityOutcome(Status.INFEASIBLE, best, cfg.restarts)


def _params_to_set(params: np.ndarray, num_senders: int) -> EncodingSet:
    encodings = [identity_encoding(num_senders)]
    for i in range(1, params.shape[0]):
        encodings.append(
            ProductEncoding(tuple(Su2Params(*params[i, k]) for k in range(num_senders)))
        )
    return EncodingSet(SystemShape(num_senders), tuple(encodings))


def phase_mask(enc_set: EncodingSet) -> np.ndarray:
    """Mask freeing x and y of every non-identity encoding, thetas frozen."""
    mask = np.zeros((len(enc_set), enc_set.shape.num_senders, 3), dtype=bool)
    mask[1:, :, 1:] = True
    return mask


# ---------------------------------------------------------------------------
# conjecture probe


@dataclass(frozen=True)
class ConjectureReport:
    """Feasibility of N = d^(M+1) - 1 over a batch of states."""

    tested_n: int
    num_states: int
    infeasible: int
    subset_of_full_basis: list[int]
    counterexample_candidates: list[dict]


def corroborate_conjecture(states: list[PureState], cfg: SolverConfig) -> ConjectureReport:
    """Probe N = d^(M+1) - 1 on each state.

    A FEASIBLE verdict there is only a genuine counterexample candidate if
    N = d^(M+1) is infeasible too; otherwise the solution is just a subset of
    a full orthogonal basis and is recorded as such.
    """
    if not states:
        raise ValueError("no states supplied")
    shape = states[0].shape
    if any(s.shape != shape for s in states):
        raise ValueError("all states must share one shape")
    n_probe = shape.total_dim - 1
    subset_idx: list[int] = []
    candidates: list[dict] = []
    infeasible = 0
    for idx, state in enumerate(states):
        cfg_i = replace(cfg, seed=cfg.seed + idx)
        rho = reduce_to_senders(state)
        if cfg.use_capacity_bound and math.log2(n_probe) > capacity_bound_bits(
            rho, shape.num_senders
        ) + 1e-9:
            infeasible += 1
            continue
        out = find_orthogonal_set(rho, n_probe, cfg_i)
        if not out.feasible:
            infeasible += 1
            continue
        full = find_orthogonal_set(rho, shape.total_dim, cfg_i)
        if full.feasible:
            subset_idx.append(idx)
        else:
            log.warning("possible counterexample at state index %d", idx)
            candidates.append(
                {
                    "index": idx,
                    "label": state.label,
                    "solution": solution_document(
                        out.solution, out.best_residual, cfg_i.seed, state=state
                    ),
                }
            )
    return ConjectureReport(
        tested_n=n_probe,
        num_states=len(states),
        infeasible=infeasible,
        subset_of_full_basis=subset_idx,
        counterexample_candidates=candidates,
    )


# ---------------------------------------------------------------------------
# solution document (JSON with 17-significant-digit reals)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return '"nan"'
        if math.isinf(f):
            return '"inf"' if f > 0 else '"-inf"'
        return format(f, ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if v is None:
        return "null"
    if isinstance(v, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_fmt(x)}" for k, x in v.items())
        return "{" + items + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)!r}")


def dumps_document(doc: dict) -> str:
    """Deterministic JSON text with reals at 17 significant digits."""
    return _fmt(doc) + "\n"


def encoding_set_to_doc(enc_set: EncodingSet) -> list:
    return [
        [{"theta": p.theta, "x": p.x, "y": p.y} for p in enc.per_sender]
        for enc in enc_set.encodings
    ]


def encoding_set_from_doc(shape: SystemShape, doc: list) -> EncodingSet:
    encodings = []
    for enc in doc:
        encodings.append(ProductEncoding(tuple(Su2Params(p["theta"], p["x"], p["y"]) for p in enc)))
    return EncodingSet(shape, tuple(encodings))


def solution_document(
    enc_set: EncodingSet,
    max_abs_overlap: float,
    seed: int,
    state: PureState | None = None,
) -> dict:
    doc = {
        "shape": {
            "num_senders": enc_set.shape.num_senders,
            "local_dim": enc_set.shape.local_dim,
        },
        "N": len(enc_set),
        "encodings": encoding_set_to_doc(enc_set),
        "max_abs_overlap": max_abs_overlap,
        "seed": seed,
    }
    if state is not None:
        doc["state"] = {
            "num_senders": state.shape.num_senders,
            "label": state.label,
            "amplitudes": [[a.real, a.imag] for a in state.amplitudes],
        }
    return doc


def solution_from_document(doc: dict) -> tuple[EncodingSet, PureState | None]:
    shape = SystemShape(int(doc["shape"]["num_senders"]))
    enc_set = encoding_set_from_doc(shape, doc["encodings"])
    state = None
    if "state" in doc:
        sdoc = doc["state"]
        amps = np.array([complex(re, im) for re, im in sdoc["amplitudes"]])
        state = PureState(SystemShape(int(sdoc["num_senders"])), amps, label=sdoc.get("label", ""))
    return enc_set, state

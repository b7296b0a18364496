import math

import numpy as np
import pytest

from ddc import (
    EncodingSet,
    ProductEncoding,
    Su2Params,
    SystemShape,
    identity_encoding,
    make_gghz,
    pair_overlap,
    reduce_to_senders,
    residual_vector,
    sample_haar_state,
    su2_matrix,
    su2_params_from_matrix,
)
from oracles import brute_encoded_state, brute_overlap, random_su2, theorem1_identity_overlap

HALF_PI = math.pi / 2


def _random_encoding(rng, m=2):
    return ProductEncoding(tuple(
        Su2Params(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
        for _ in range(m)
    ))


class TestSu2Matrix:
    def test_identity(self):
        assert np.allclose(su2_matrix(Su2Params(0, 0, 0)), np.eye(2), atol=1e-15)

    def test_real_rotation(self):
        u = su2_matrix(Su2Params(HALF_PI, 0, 0))
        assert np.allclose(u, [[0, -1], [1, 0]], atol=1e-15)

    def test_unitarity_and_det(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = Su2Params(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi),
                          rng.uniform(0, 2 * math.pi))
            u = su2_matrix(p)
            assert np.abs(u.conj().T @ u - np.eye(2)).max() < 1e-12
            assert abs(np.linalg.det(u) - 1) < 1e-12

    def test_angle_reduction_preserves_matrix(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            th, x, y = rng.uniform(-10, 10, 3)
            u_raw = np.array([
                [math.cos(th) * np.exp(1j * x), -math.sin(th) * np.exp(1j * y)],
                [math.sin(th) * np.exp(-1j * y), math.cos(th) * np.exp(-1j * x)],
            ])
            p = Su2Params(th, x, y)
            assert 0 <= p.theta <= math.pi
            assert np.abs(su2_matrix(p) - u_raw).max() < 1e-12

    def test_roundtrip_from_matrix(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            u = random_su2(rng)
            p = su2_params_from_matrix(u)
            assert np.abs(su2_matrix(p) - u).max() < 1e-12


class TestPairOverlap:
    def test_identity_pair_gives_trace(self):
        rho = reduce_to_senders(make_gghz(2, 0.37))
        e = identity_encoding(2)
        assert abs(pair_overlap(rho, e, e) - 1.0) < 1e-12

    def test_theorem_factor_vanishes(self):
        rho = reduce_to_senders(make_gghz(2, 0.3))
        a = ProductEncoding((Su2Params(HALF_PI, 0.3, 0.9), Su2Params(0.7, 0.1, 0.2)))
        assert abs(pair_overlap(rho, a, identity_encoding(2))) < 1e-12
        assert abs(pair_overlap(rho, identity_encoding(2), a)) < 1e-12

    def test_matches_bruteforce_1000_cases(self):
        rng = np.random.default_rng(3)
        for trial in range(1000):
            m = 2 if trial % 3 else 3
            st = sample_haar_state(SystemShape(m), trial)
            rho = reduce_to_senders(st)
            a = _random_encoding(rng, m)
            b = _random_encoding(rng, m)
            mine = pair_overlap(rho, a, b)
            oracle = brute_overlap(
                rho.entries,
                [su2_matrix(p) for p in a.per_sender],
                [su2_matrix(p) for p in b.per_sender],
            )
            assert abs(mine - oracle) < 1e-12

    def test_conjugate_symmetry_1000_triples(self):
        rng = np.random.default_rng(4)
        for trial in range(1000):
            st = sample_haar_state(SystemShape(2), 10_000 + trial)
            rho = reduce_to_senders(st)
            a = _random_encoding(rng)
            b = _random_encoding(rng)
            assert abs(pair_overlap(rho, a, b) - np.conj(pair_overlap(rho, b, a))) < 1e-12

    def test_magnitude_bounded_by_one(self):
        rng = np.random.default_rng(5)
        for trial in range(300):
            st = sample_haar_state(SystemShape(2), 20_000 + trial)
            rho = reduce_to_senders(st)
            g = pair_overlap(rho, _random_encoding(rng), _random_encoding(rng))
            assert abs(g) <= 1 + 1e-12

    def test_theorem1_symbolic_expression_1000_cases(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            alpha = rng.uniform(0, 1)
            mu = rng.uniform(0, 2 * math.pi)
            rho = reduce_to_senders(make_gghz(2, alpha, mu))
            th1, th2 = rng.uniform(0, math.pi, 2)
            x1, x2 = rng.uniform(0, 2 * math.pi, 2)
            y1, y2 = rng.uniform(0, 2 * math.pi, 2)
            a = ProductEncoding((Su2Params(th1, x1, y1), Su2Params(th2, x2, y2)))
            mine = pair_overlap(rho, identity_encoding(2), a)
            assert abs(mine - theorem1_identity_overlap(alpha, th1, x1, th2, x2)) < 1e-12

    def test_dimension_mismatch_rejected(self):
        rho = reduce_to_senders(make_gghz(2, 0.5))
        with pytest.raises(ValueError):
            pair_overlap(rho, identity_encoding(3), identity_encoding(3))


# iZ, iX and i(XZ) in (theta, x, y) form; the i factors keep det = 1
PAULIISH_Z = Su2Params(0.0, HALF_PI, 0.0)
PAULIISH_X = Su2Params(HALF_PI, 0.0, 3 * HALF_PI)
PAULIISH_XZ = Su2Params(HALF_PI, 0.0, 0.0)
IDENT = Su2Params(0.0, 0.0, 0.0)


def ghz_pauli_set() -> EncodingSet:
    shape = SystemShape(2)
    return EncodingSet(shape, (
        ProductEncoding((IDENT, IDENT)),
        ProductEncoding((PAULIISH_Z, IDENT)),
        ProductEncoding((PAULIISH_X, PAULIISH_X)),
        ProductEncoding((PAULIISH_XZ, PAULIISH_X)),
    ))


class TestResidualVector:
    def test_ghz_pauli_fixture_is_orthogonal(self):
        st = make_gghz(2, 0.5)
        rho = reduce_to_senders(st)
        enc_set = ghz_pauli_set()
        # first trust the fixture only after the oracle confirms it
        mats = [[su2_matrix(p) for p in e.per_sender] for e in enc_set.encodings]
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(brute_overlap(rho.entries, mats[i], mats[j])) < 1e-12
        res = residual_vector(rho, enc_set)
        assert res.shape == (12,)
        assert np.abs(res).max() < 1e-12

    def test_identity_only_empty(self):
        rho = reduce_to_senders(make_gghz(2, 0.5))
        enc_set = EncodingSet(SystemShape(2), (ProductEncoding((IDENT, IDENT)),))
        assert residual_vector(rho, enc_set).size == 0

    def test_duplicate_encoding_gives_unit_residual(self):
        rho = reduce_to_senders(make_gghz(2, 0.5))
        dup = ProductEncoding((PAULIISH_X, PAULIISH_Z))
        enc_set = EncodingSet(SystemShape(2), (
            ProductEncoding((IDENT, IDENT)), dup, dup,
        ))
        res = residual_vector(rho, enc_set)
        pairs = res.reshape(-1, 2)
        assert any(abs(re - 1) < 1e-12 and abs(im) < 1e-12 for re, im in pairs)

    def test_zero_iff_encoded_states_orthogonal(self):
        # residuals match the Gram matrix of the fully encoded state vectors
        rng = np.random.default_rng(7)
        for trial in range(100):
            st = sample_haar_state(SystemShape(2), 30_000 + trial)
            rho = reduce_to_senders(st)
            encs = [identity_encoding(2)] + [_random_encoding(rng) for _ in range(3)]
            enc_set = EncodingSet(SystemShape(2), tuple(encs))
            res = residual_vector(rho, enc_set).reshape(-1, 2)
            vecs = [
                brute_encoded_state(st.amplitudes, [su2_matrix(p) for p in e.per_sender])
                for e in encs
            ]
            k = 0
            for i in range(4):
                for j in range(i + 1, 4):
                    gram = np.vdot(vecs[i], vecs[j])
                    assert abs(complex(res[k, 0], res[k, 1]) - gram) < 1e-10
                    k += 1

    def test_first_encoding_must_be_identity(self):
        with pytest.raises(ValueError):
            EncodingSet(SystemShape(2), (ProductEncoding((PAULIISH_X, IDENT)),))

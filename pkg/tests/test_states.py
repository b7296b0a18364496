import math

import numpy as np
import pytest

from ddc import (
    GHZ_CLASS,
    W_CLASS,
    SystemShape,
    make_dicke4,
    make_gghz,
    make_gw,
    make_ws,
    reduce_to_senders,
    sample_class,
    sample_haar_state,
    three_tangle,
)
from ddc.states import DensityMatrix, PureState, basis_index

from oracles import brute_partial_trace_receiver, brute_three_tangle


class TestGghz:
    def test_ghz_amplitudes(self):
        st = make_gghz(2, 0.5)
        v = np.zeros(8, dtype=complex)
        v[0] = v[7] = 1 / math.sqrt(2)
        assert np.allclose(st.amplitudes, v, atol=1e-15)

    def test_product_endpoint(self):
        st = make_gghz(2, 1.0)
        assert abs(np.linalg.norm(st.amplitudes) - 1) < 1e-12
        assert abs(st.amplitudes[0] - 1) < 1e-15
        rho = reduce_to_senders(st).entries
        assert abs(np.trace(rho @ rho).real - 1.0) < 1e-10  # pure marginal

    def test_complex_phase_and_partial_trace(self):
        st = make_gghz(2, 0.3, mu=math.pi / 4)
        assert abs(st.amplitudes[0] - math.sqrt(0.3)) < 1e-15
        assert abs(st.amplitudes[7] - math.sqrt(0.7) * np.exp(1j * math.pi / 4)) < 1e-15
        rho = reduce_to_senders(st).entries
        oracle = brute_partial_trace_receiver(st.amplitudes, 2)
        assert np.abs(rho - oracle).max() < 1e-14
        assert np.allclose(np.diag(rho), [0.3, 0, 0, 0.7], atol=1e-14)

    def test_four_qubit_form(self):
        st = make_gghz(3, 0.25, mu=1.0)
        assert st.amplitudes.shape == (16,)
        assert abs(st.amplitudes[0] - 0.5) < 1e-15
        assert abs(abs(st.amplitudes[15]) - math.sqrt(0.75)) < 1e-15

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            make_gghz(2, 1.2)
        with pytest.raises(ValueError):
            make_gghz(4, 0.5)


class TestGw:
    def test_w_state(self):
        st = make_gw(1 / 3, 1 / 3)
        shape = st.shape
        for bits in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
            assert abs(st.amplitudes[basis_index(shape, bits)] - 1 / math.sqrt(3)) < 1e-12

    def test_simplex_vertex(self):
        st = make_gw(1.0, 0.0)
        assert abs(st.amplitudes[1] - 1.0) < 1e-15

    def test_reduced_diagonal_and_spectrum(self):
        st = make_gw(0.5, 0.25)
        rho = reduce_to_senders(st).entries
        oracle = brute_partial_trace_receiver(st.amplitudes, 2)
        assert np.abs(rho - oracle).max() < 1e-14
        # populations in the computational basis {|00>,|01>,|10>,|11>}
        assert np.allclose(np.diag(rho).real, [0.5, 0.25, 0.25, 0.0], atol=1e-12)
        # the |01>/|10> block is coherent, so the spectrum pairs up
        ev = np.sort(np.linalg.eigvalsh(rho))[::-1]
        assert np.allclose(ev, [0.5, 0.5, 0.0, 0.0], atol=1e-12)

    def test_rejects_outside_simplex(self):
        with pytest.raises(ValueError):
            make_gw(0.7, 0.4)


class TestWs:
    def test_endpoints(self):
        w = make_gw(1 / 3, 1 / 3)
        assert np.abs(make_ws(0.0).amplitudes - w.amplitudes).max() < 1e-15
        assert abs(make_ws(1.0).amplitudes[0] - 1.0) < 1e-12

    def test_overlap_with_vacuum(self):
        st = make_ws(0.02)
        assert abs(np.linalg.norm(st.amplitudes) - 1) < 1e-12
        assert abs(st.amplitudes[0] - math.sqrt(0.02)) < 1e-12

    def test_rejects_outside_range(self):
        with pytest.raises(ValueError):
            make_ws(-0.1)


class TestDicke4:
    def test_symmetric_dicke(self):
        st = make_dicke4(2, np.ones(6))
        nz = np.flatnonzero(np.abs(st.amplitudes) > 1e-14)
        assert [bin(i).count("1") for i in nz] == [2] * 6
        assert np.allclose(st.amplitudes[nz], 1 / math.sqrt(6), atol=1e-14)

    def test_vertex(self):
        st = make_dicke4(1, [1, 0, 0, 0])
        assert abs(st.amplitudes[0b1000] - 1.0) < 1e-15

    def test_random_support(self):
        rng = np.random.default_rng(5)
        amps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        st = make_dicke4(2, amps)
        for i, a in enumerate(st.amplitudes):
            if bin(i).count("1") != 2:
                assert a == 0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            make_dicke4(2, np.ones(4))
        with pytest.raises(ValueError):
            make_dicke4(1, np.zeros(4))
        with pytest.raises(ValueError):
            make_dicke4(3, np.ones(4))


class TestSampling:
    def test_haar_determinism(self):
        shape = SystemShape(2)
        a = sample_haar_state(shape, 123)
        b = sample_haar_state(shape, 123)
        assert np.array_equal(a.amplitudes, b.amplitudes)
        c = sample_haar_state(shape, 124)
        assert not np.array_equal(a.amplitudes, c.amplitudes)

    def test_haar_norm(self):
        for seed in range(20):
            st = sample_haar_state(SystemShape(3), seed)
            assert abs(np.linalg.norm(st.amplitudes) - 1) < 1e-12

    def test_haar_uniform_moments(self):
        # mean |amp_i|^2 = 1/8 for every index, checked within 5 sigma
        shape = SystemShape(2)
        n = 10_000
        acc = np.zeros(8)
        for seed in range(n):
            acc += np.abs(sample_haar_state(shape, seed).amplitudes) ** 2
        mean = acc / n
        # var of |amp|^2 under Haar is d-1 / (d^2 (d+1)) with d = 8
        sigma = math.sqrt((8 - 1) / (64 * 9) / n)
        assert np.abs(mean - 1 / 8).max() < 5 * sigma

    def test_class_determinism(self):
        a = sample_class(W_CLASS, 7)
        b = sample_class(W_CLASS, 7)
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_w_class_tangle_zero(self):
        for seed in range(50):
            st = sample_class(W_CLASS, seed)
            assert brute_three_tangle(st.amplitudes) < 1e-8

    def test_ghz_class_tangle_positive(self):
        for seed in range(50):
            st = sample_class(GHZ_CLASS, seed)
            assert brute_three_tangle(st.amplitudes) > 1e-8

    def test_w_class_support(self):
        st = sample_class(W_CLASS, 3)
        support = np.flatnonzero(np.abs(st.amplitudes) > 1e-14)
        assert set(support) <= {0, 1, 2, 4}


class TestReduce:
    def test_ghz_reduction(self):
        rho = reduce_to_senders(make_gghz(2, 0.5)).entries
        assert np.allclose(rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-14)
        assert abs(np.trace(rho @ rho).real - 0.5) < 1e-10

    def test_product_reduction_rank1(self):
        rho = reduce_to_senders(make_gghz(2, 1.0)).entries
        expect = np.zeros((4, 4))
        expect[0, 0] = 1.0
        assert np.allclose(rho, expect, atol=1e-14)

    def test_w_reduction_eigenvalues(self):
        rho = reduce_to_senders(make_gw(1 / 3, 1 / 3)).entries
        ev = np.sort(np.linalg.eigvalsh(rho))[::-1]
        assert np.allclose(ev, [2 / 3, 1 / 3, 0, 0], atol=1e-12)

    def test_matches_bruteforce_on_random_states(self):
        for seed in range(1000):
            st = sample_haar_state(SystemShape(2), seed)
            rho = reduce_to_senders(st)
            oracle = brute_partial_trace_receiver(st.amplitudes, 2)
            assert np.abs(rho.entries - oracle).max() < 1e-13
            # type invariants hold: Hermitian, unit trace, PSD
            assert abs(np.trace(rho.entries).real - 1) < 1e-12


class TestTypes:
    def test_purestate_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PureState(SystemShape(2), np.ones(8))

    def test_purestate_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            PureState(SystemShape(2), np.ones(4))

    def test_density_rejects_nonhermitian(self):
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 0.5
        with pytest.raises(ValueError):
            DensityMatrix(m)

    def test_density_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(4, dtype=complex))

    def test_tangle_boundary_consistency(self):
        # module-level boundary: class samplers agree with the public measure
        for seed in range(20):
            assert three_tangle(sample_class(W_CLASS, seed)) <= 1e-8
            assert three_tangle(sample_class(GHZ_CLASS, seed)) > 1e-8

import itertools
from functools import reduce

import numpy as np
import pytest

from quditlab import qec
from quditlab.errors import ConfigError, DimensionCapExceeded
from quditlab.metrics import fidelity
from quditlab.operators import cyclic_shift, full_entangled, gen_x_prime, gen_z, qudit_qft

# ---------------------------------------------------------------------------
# Literal oracle: the full six-qudit circuit with dense d^6 matrices, built
# only from explicit basis permutations and Kronecker products.
# ---------------------------------------------------------------------------


def _embed(op, site, d, n=6):
    eye = np.eye(d)
    return reduce(np.kron, [op if i == site else eye for i in range(1, n + 1)])


def _perm(d, n, fn):
    """Permutation matrix sending basis tuple k to fn(k)."""
    dim = d ** n
    u = np.zeros((dim, dim))
    for k in itertools.product(range(d), repeat=n):
        src = int(np.ravel_multi_index(k, (d,) * n))
        dst = int(np.ravel_multi_index(fn(list(k)), (d,) * n))
        u[dst, src] = 1
    return u


def _cnot(d, c, t, sign=1):
    def fn(k):
        k[t - 1] = (k[t - 1] + sign * k[c - 1]) % d
        return k
    return _perm(d, 6, fn)


def _syndrome(d):
    """sum_{k1,k2} S1^k1 S2^k2 (x) |k1 k2><k1 k2| on sites 2..6, by explicit phases."""
    w = np.exp(2j * np.pi / d)
    diag = np.zeros((d,) * 6, dtype=complex)
    for k in itertools.product(range(d), repeat=6):
        _, a, b, c, k1, k2 = k
        diag[k] = w ** (k1 * (a - b) + k2 * (b - c))
    return np.diag(diag.reshape(-1))


_CORRECTIONS = {}


def _table(d):
    if d not in _CORRECTIONS:
        t = {(0, 0): (0, 0, 0)}
        for i in range(1, d):
            t[(i, 0)] = (i, 0, 0)
            t[((-i) % d, i)] = (0, i, 0)
            t[(0, (-i) % d)] = (0, 0, i)
        _CORRECTIONS[d] = t
    return _CORRECTIONS[d]


def literal_qec(d, model, p, tau, inject=None):
    ops = {"z": [gen_z(d)], "xprime": [gen_x_prime(d)], "xprime+z": [gen_x_prime(d), gen_z(d)]}[model]
    e0 = np.zeros(d)
    e0[0] = 1
    rho = reduce(np.kron, [full_entangled(d), *[np.outer(e0, e0)] * 4])
    f = qudit_qft(d)

    def conj(u, r):
        return u @ r @ u.conj().T

    rho = conj(_cnot(d, 2, 3) @ _cnot(d, 2, 4), rho)
    for s in (2, 3, 4):
        rho = conj(_embed(f, s, d), rho)
    if inject is not None:
        site, power = inject
        rho = conj(_embed(np.linalg.matrix_power(gen_z(d), power), site, d), rho)
    for _ in range(tau):
        for s in (4, 3, 2):
            new = (1 - p) * rho
            for u in ops:
                br = conj(_embed(u, s, d), rho)
                new = new + (p / len(ops)) * br / np.trace(br).real
            rho = new
    for s in (2, 3, 4):
        rho = conj(_embed(f.conj().T, s, d), rho)
    for s in (5, 6):
        rho = conj(_embed(f, s, d), rho)
    rho = conj(_syndrome(d), rho)
    for s in (5, 6):
        rho = conj(_embed(f.conj().T, s, d), rho)
    out = np.zeros_like(rho)
    xd = cyclic_shift(d).conj().T
    probs = {}
    for m1, m2 in itertools.product(range(d), repeat=2):
        proj = np.kron(np.eye(d ** 4), np.kron(np.diag(np.eye(d)[m1]), np.diag(np.eye(d)[m2])))
        br = proj @ rho @ proj
        probs[(m1, m2)] = np.trace(br).real
        x = _table(d).get((m1, m2), (0, 0, 0))
        corr = reduce(np.matmul, [_embed(np.linalg.matrix_power(xd, xi), s, d) for s, xi in zip((2, 3, 4), x)])
        out += conj(corr, br)
    rho = conj(_cnot(d, 2, 3, -1) @ _cnot(d, 2, 4, -1), out)
    red = np.einsum("abijklABijkl->abAB", rho.reshape((d,) * 12)).reshape(d * d, d * d)
    return fidelity(full_entangled(d), red), probs


# ---------------------------------------------------------------------------


class TestOracle:
    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("model,p,tau", [("z", 0.1, 1), ("xprime", 0.05, 2), ("xprime+z", 0.2, 1)])
    def test_branch_implementation_matches_literal_circuit(self, d, model, p, tau):
        expected, _ = literal_qec(d, model, p, tau)
        got, _ = qec.qec_fidelity(d, model, p, tau)
        assert got == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("d", [2, 3])
    def test_injected_syndromes_match_literal_circuit(self, d):
        for site in qec.DATA:
            for i in range(1, d):
                fid, probs = literal_qec(d, "z", 0.0, 0, inject=(site, i))
                out = qec.inject(qec.encode(full_entangled(d), d), d,
                                 [(site, np.linalg.matrix_power(gen_z(d), i))])
                assert fid == pytest.approx(1.0, abs=1e-9)
                for m, pm in probs.items():
                    assert out.syndrome_probs[m] == pytest.approx(pm, abs=1e-12)


class TestEncoding:
    def test_basis_states(self):
        for d, k in ((2, 0), (3, 1), (3, 2)):
            psi = np.zeros(d * d)
            psi[k] = 1  # reference |0>, data |k>
            out = qec.encode_vec(psi, d)
            target = np.zeros(d ** 4)
            target[np.ravel_multi_index((0, k, k, k), (d,) * 4)] = 1
            np.testing.assert_allclose(out, target, atol=1e-15)

    def test_density_matches_vector(self):
        d = 3
        psi = full_entangled(d, vector=True)
        v = qec.encode_vec(psi, d)
        np.testing.assert_allclose(qec.encode(full_entangled(d), d), np.outer(v, v.conj()), atol=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_codewords_stabilized(self, d):
        s1, s2 = qec.stabilizers(d)
        for k in range(d):
            e = np.zeros(d ** 3)
            e[k * (d * d + d + 1)] = 1
            np.testing.assert_allclose(s1 @ e, e, atol=1e-12)
            np.testing.assert_allclose(s2 @ e, e, atol=1e-12)

    def test_wrong_shape(self):
        with pytest.raises(ConfigError):
            qec.encode(np.eye(4) / 4, 3)


class TestSyndrome:
    def test_zero_ancillas_act_trivially(self):
        d = 3
        u = qec.syndrome_operator(d).reshape((d ** 3, d, d, d ** 3, d, d))
        np.testing.assert_allclose(u[:, 0, 0, :, 0, 0], np.eye(d ** 3), atol=1e-15)

    def test_unitary(self):
        u = qec.syndrome_operator(3)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(3 ** 5), atol=1e-12)

    def test_qubit_parity_checks(self):
        # d = 2: controlled-(Z1 Z2) from ancilla 1 and controlled-(Z2 Z3) from ancilla 2
        zz1 = np.kron(np.kron(np.diag([1, -1]), np.diag([1, -1])), np.eye(2))
        zz2 = np.kron(np.eye(2), np.kron(np.diag([1, -1]), np.diag([1, -1])))
        p0, p1 = np.diag([1, 0]), np.diag([0, 1])
        c1 = np.kron(np.eye(8), np.kron(p0, np.eye(2))) + np.kron(zz1, np.kron(p1, np.eye(2)))
        c2 = np.kron(np.eye(8), np.kron(np.eye(2), p0)) + np.kron(zz2, np.kron(np.eye(2), p1))
        np.testing.assert_allclose(qec.syndrome_operator(2), c1 @ c2, atol=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_branches_complete(self, d):
        total = sum(k.conj().T @ k for k in qec.syndrome_branches(d).values())
        np.testing.assert_allclose(total, np.eye(d ** 3), atol=1e-12)

    def test_dense_cap(self, monkeypatch):
        monkeypatch.setenv("QUDITLAB_DENSE_CAP", "100")
        with pytest.raises(DimensionCapExceeded):
            qec.syndrome_operator(3)


class TestTable:
    def test_rows(self):
        d = 5
        for i in range(1, d):
            assert qec.correction_for(i, 0, d) == (i, 0, 0)
            assert qec.correction_for(-i, i, d) == (0, i, 0)
            assert qec.correction_for(0, -i, d) == (0, 0, i)
        assert qec.correction_for(0, 0, d) == (0, 0, 0)
        assert qec.correction_for(1, 1, d) is None

    def test_correction_inverts_shift(self):
        d = 4
        x = cyclic_shift(d)
        op = qec.correction_operator((1, 2, 3), d)
        err = np.kron(np.kron(x, np.linalg.matrix_power(x, 2)), np.linalg.matrix_power(x, 3))
        np.testing.assert_allclose(op @ err, np.eye(d ** 3), atol=1e-15)


class TestRound:
    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("model", ["z", "xprime", "xprime+z"])
    def test_noiseless_identity(self, d, model):
        for tau in (0, 3):
            f, bad = qec.qec_fidelity(d, model, 0.0, tau)
            assert f == pytest.approx(1.0, abs=1e-9)
            assert bad == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_single_injection_syndromes(self, d):
        z = gen_z(d)
        for i in range(1, d):
            zi = np.linalg.matrix_power(z, i)
            out1 = qec.inject(qec.encode(full_entangled(d), d), d, [(2, zi)])
            assert out1.syndrome_probs[(i, 0)] == pytest.approx(1.0, abs=1e-12)
            out3 = qec.inject(qec.encode(full_entangled(d), d), d, [(4, zi)])
            assert out3.syndrome_probs[(0, (-i) % d)] == pytest.approx(1.0, abs=1e-12)
            for out in (out1, out3):
                assert fidelity(full_entangled(d), out.logical_state()) >= 1 - 1e-9

    def test_double_error_flagged(self):
        d = 3
        z = gen_z(d)
        # shifts (2, 1, 0) give syndrome (1, 1), which has no table entry
        out = qec.inject(qec.encode(full_entangled(d), d), d, [(2, z @ z), (3, z)])
        assert out.uncorrectable_fraction == pytest.approx(1.0, abs=1e-12)

    def test_branch_sum_trace_preserving(self):
        out = qec.qec_round(qec.encode(full_entangled(3), 3), 3, "xprime+z", 0.3, 2)
        assert np.trace(out.rho).real == pytest.approx(1.0, abs=1e-9)
        assert sum(out.syndrome_probs.values()) == pytest.approx(1.0, abs=1e-9)

    def test_rounds(self):
        f1, _ = qec.qec_fidelity(3, "z", 0.05, 2, rounds=1)
        f2, _ = qec.qec_fidelity(3, "z", 0.05, 2, rounds=2)
        assert f2 < f1

    def test_inject_rejects_reference(self):
        with pytest.raises(ConfigError):
            qec.inject(qec.encode(full_entangled(2), 2), 2, [(1, gen_z(2))])

    def test_bad_schedule(self):
        with pytest.raises(ConfigError):
            qec.qec_round(qec.encode(full_entangled(2), 2), 2, "z", 0.1, -1)


class TestTrajectories:
    def test_agrees_with_dense_tau_10(self):
        dense, _ = qec.qec_fidelity(3, "xprime+z", 0.02, 10)
        est, se = qec.qec_round_trajectories(3, "xprime+z", 0.02, 10, 10_000, np.random.default_rng(42))
        assert abs(est - dense) <= 3 * se

    def test_baseline_agrees_with_dense(self):
        dense = qec.baseline_fidelity(3, "xprime", 0.05, 10)
        est, se = qec.baseline_trajectories(3, "xprime", 0.05, 10, 10_000, np.random.default_rng(7))
        assert abs(est - dense) <= 3 * se

    def test_seed_reproducible(self):
        a = qec.qec_round_trajectories(2, "z", 0.1, 3, 500, np.random.default_rng(1))
        b = qec.qec_round_trajectories(2, "z", 0.1, 3, 500, np.random.default_rng(1))
        assert a == b

    def test_single_round_only(self):
        with pytest.raises(ConfigError):
            qec.qec_round_trajectories(2, "z", 0.1, 1, 10, np.random.default_rng(0), rounds=2)


class TestCompare:
    def test_dense_points(self):
        pts = qec.compare_with_without("z", 3, [0.01, 0.05], tau=1)
        assert [pt.p for pt in pts] == [0.01, 0.05]
        assert all(pt.with_qec > pt.without_qec for pt in pts)

    def test_default_grid(self):
        g = qec.default_p_grid()
        assert len(g) == 21 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(0.5)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            qec.compare_with_without("z", 2, [0.1], mode="sampled")

    def test_trajectory_mode_has_errors_bars(self):
        pts = qec.compare_with_without("z", 2, [0.1], tau=2, mode="trajectory", n_traj=200, seed=3)
        assert pts[0].with_qec_se > 0

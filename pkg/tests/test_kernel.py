import io

import numpy as np
import pytest

from conftest import valid_kernels
from nsdpp.errors import CapExceeded, DimMismatch, DomainError, SingularConversion
from nsdpp.kernel import (
    Kernel,
    Role,
    all_principal_minors,
    as_kernel,
    from_mask,
    k_to_l,
    l_to_k,
    mask_bits,
    principal_minor,
    read_mtxt,
    set_probability,
    subset,
    sum_minor_identity_check,
    tau_det,
    to_mask,
    write_mtxt,
)


def brute_minor(a, s):
    s = list(s)
    return 1.0 if not s else np.linalg.det(a[np.ix_(s, s)])


class TestKernelType:
    def test_entries_are_read_only(self):
        k = Kernel(np.eye(2))
        with pytest.raises(ValueError):
            k.entries[0, 0] = 3.0

    def test_rejects_non_square_and_nan(self):
        with pytest.raises(DomainError):
            Kernel(np.ones((2, 3)))
        with pytest.raises(DomainError):
            Kernel([[np.nan]])

    def test_role_mismatch(self):
        with pytest.raises(DomainError):
            as_kernel(Kernel(np.eye(2), Role.LENSEMBLE), Role.CORRELATION)

    def test_array_protocol(self):
        k = Kernel([[0.5, 0.1], [0.2, 0.3]])
        np.testing.assert_array_equal(np.asarray(k), k.entries)
        assert k.n == 2


class TestSubsets:
    def test_masks_round_trip(self):
        for m in range(32):
            assert to_mask(from_mask(m, 5)) == m

    def test_mask_bits_order(self):
        bits = mask_bits(3)
        assert bits.shape == (8, 3)
        assert tuple(np.flatnonzero(bits[6])) == (1, 2)

    def test_subset_validation(self):
        assert subset([2, 0], 3) == (0, 2)
        with pytest.raises(DomainError):
            subset([3], 3)
        with pytest.raises(DomainError):
            subset([1, 1], 3)

    def test_tau(self):
        assert tau_det(np.full((4, 4), 3.0)) == pytest.approx(1e-9 * 3 * 4)
        assert tau_det(np.eye(2) * 0.1) == pytest.approx(2e-9)


class TestPrincipalMinor:
    def test_empty_is_one(self):
        assert principal_minor(np.zeros((3, 3)), []) == 1.0

    def test_examples(self):
        k = np.array([[0.5, 0.5], [-0.5, 0.5]])
        assert principal_minor(k, [0, 1]) == pytest.approx(0.5)
        assert principal_minor(k, [1]) == pytest.approx(0.5)

    def test_all_minors_match_direct(self, rng):
        a = rng.uniform(-1, 1, (5, 5))
        minors = all_principal_minors(a)
        for m in range(32):
            assert minors[m] == pytest.approx(brute_minor(a, from_mask(m, 5)), abs=1e-13)

    def test_sum_of_minors_identity(self, rng):
        assert sum_minor_identity_check(np.zeros((3, 3))) == 0.0
        assert sum_minor_identity_check(np.eye(2)) == pytest.approx(0.0, abs=1e-14)
        for _ in range(10):
            assert sum_minor_identity_check(rng.uniform(-1, 1, (5, 5))) < 1e-10

    def test_cap(self):
        with pytest.raises(CapExceeded):
            all_principal_minors(np.eye(5), cap=4)


class TestSetProbability:
    def test_half_identity(self):
        k = 0.5 * np.eye(2)
        for s in ([], [0], [1], [0, 1]):
            assert set_probability(k, s) == pytest.approx(0.25)

    def test_nonsymmetric_example(self):
        k = np.array([[0.5, 0.5], [-0.5, 0.5]])
        assert set_probability(k, []) == pytest.approx(0.5)
        assert set_probability(k, [0]) == pytest.approx(0.0, abs=1e-15)
        assert set_probability(k, [0, 1]) == pytest.approx(0.5)

    def test_mobius_consistency(self):
        # sum over supersets of P(X = T) equals det(K_S)
        for k in valid_kernels(20, (1, 6), seed=11):
            n = k.shape[0]
            probs = np.array([set_probability(k, from_mask(m, n)) for m in range(1 << n)])
            tol = (1 << n) * tau_det(k)
            assert abs(probs.sum() - 1) < tol
            assert probs.min() > -tau_det(k)
            for s in range(1 << n):
                sup = sum(probs[t] for t in range(1 << n) if t & s == s)
                assert abs(sup - principal_minor(k, from_mask(s, n))) < tol

    def test_lensemble_matches(self, rng):
        from nsdpp.constructions import random_lensemble

        ell = random_lensemble(4, rng)
        k = l_to_k(Kernel(ell, Role.LENSEMBLE))
        z = np.linalg.det(np.eye(4) + ell)
        for m in range(16):
            s = from_mask(m, 4)
            assert set_probability(k, s) == pytest.approx(brute_minor(ell, s) / z, abs=1e-10)


class TestConversions:
    def test_scalar_example(self):
        assert k_to_l(np.diag([0.5, 0.25])).entries == pytest.approx(np.diag([1.0, 1.0 / 3.0]))

    def test_round_trips(self):
        for k in valid_kernels(40, (1, 6), seed=5):
            n = k.shape[0]
            if np.linalg.cond(np.eye(n) - k) > 1e6:
                continue
            back = l_to_k(k_to_l(k)).entries
            assert np.allclose(back, k, rtol=1e-10, atol=1e-10)
            ell = k_to_l(k).entries
            assert np.allclose(k_to_l(l_to_k(Kernel(ell, Role.LENSEMBLE))).entries, ell,
                               rtol=1e-10, atol=1e-10 * max(1, np.abs(ell).max()))

    def test_singular(self):
        with pytest.raises(SingularConversion):
            k_to_l(np.eye(2))
        with pytest.raises(SingularConversion):
            l_to_k(Kernel(-np.eye(2), Role.LENSEMBLE))


class TestMtxt:
    def test_round_trip_exact(self, rng):
        a = rng.standard_normal((4, 4))
        buf = io.StringIO()
        write_mtxt(buf, a, comment="test")
        text = buf.getvalue()
        assert text.startswith("#") and "0-based" in text.splitlines()[0]
        np.testing.assert_array_equal(read_mtxt(io.StringIO(text)), a)

    def test_file(self, tmp_path):
        path = tmp_path / "k.mtxt"
        write_mtxt(path, np.eye(3) * 0.5)
        np.testing.assert_array_equal(read_mtxt(path), np.eye(3) * 0.5)

    def test_comments_and_errors(self):
        assert read_mtxt(io.StringIO("# c\n1\n# mid\n0.25\n"))[0, 0] == 0.25
        with pytest.raises(DimMismatch):
            read_mtxt(io.StringIO("2\n1 2\n"))
        with pytest.raises(DimMismatch):
            read_mtxt(io.StringIO("2\n1 2\n3\n"))
        with pytest.raises(DomainError):
            read_mtxt(io.StringIO("x\n"))

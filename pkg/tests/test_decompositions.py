"""Tests for decompositions module."""

import numpy as np
import pytest


@pytest.fixture
def symr2():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 2)


@pytest.fixture
def symr3():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 3)


@pytest.fixture(params=[("symr", 3, None), ("hermc", 2, None), ("hermh", 2, None), ("spin", 2, 5)])
def algebra(request):
    from src.algebra_core import make_algebra

    return make_algebra(*request.param)


@pytest.mark.unit
def test_spectral_of_unit(algebra):
    """Test that e has all eigenvalues 1."""
    from src.algebra_core import unit
    from src.decompositions import spectral

    data = spectral(unit(algebra))
    assert np.allclose(data.eigenvalues, 1.0)


@pytest.mark.unit
def test_spectral_diagonal(symr2):
    """Test diag(2, -1): eigenvalues (2, -1) and frame {E11, E22}."""
    from src.algebra_core import element
    from src.decompositions import spectral

    data = spectral(element(symr2, [2.0, -1.0, 0.0]))
    assert data.eigenvalues == pytest.approx((2.0, -1.0))
    assert np.allclose(data.frame[1].coords, [1.0, 0.0, 0.0], atol=1e-9)
    assert np.allclose(data.frame[2].coords, [0.0, 1.0, 0.0], atol=1e-9)
    assert data.determinant == pytest.approx(-2.0)


@pytest.mark.unit
def test_spectral_reconstructs_and_frame_is_valid(algebra):
    """Test x = sum lambda_i e_i with a valid frame and descending eigenvalues."""
    from src.algebra_core import det, element
    from src.decompositions import spectral

    x = element(algebra, np.random.default_rng(7).normal(size=algebra.dim))
    data = spectral(x)
    assert data.reconstruct().allclose(x, 1e-8)
    data.frame.validate(1e-7)
    assert list(data.eigenvalues) == sorted(data.eigenvalues, reverse=True)
    assert data.determinant == pytest.approx(det(x), rel=1e-7, abs=1e-10)


@pytest.mark.unit
def test_spin_spectral_closed_form():
    """Test eigenvalues lambda +- |u| and idempotents (1, +-u/|u|)/2 in Spin(5)."""
    from src.algebra_core import make_algebra, spin_element, spin_parts
    from src.decompositions import spectral

    algebra = make_algebra("spin", None, 5)
    data = spectral(spin_element(algebra, 1.0, [0.0, 3.0, 4.0, 0.0]))
    assert data.eigenvalues == pytest.approx((6.0, -4.0))
    lam, u = spin_parts(data.frame[1])
    assert lam == pytest.approx(0.5)
    assert np.allclose(u, [0.0, 0.3, 0.4, 0.0])


@pytest.mark.unit
@pytest.mark.parametrize(
    "coords,expected",
    [
        ([1.0, 1.0, 1.0, 0.0, 0.0, 0.0], "Omega_0"),
        ([1.0, -1.0, 0.0, 0.0, 0.0, 0.0], "S_{2,1}"),
        ([-1.0, -2.0, -3.0, 0.0, 0.0, 0.0], "Omega_3"),
        ([0.0, 0.0, 0.0, 0.0, 0.0, 0.0], "S_{0,0}"),
    ],
)
def test_rank_signature(symr3, coords, expected):
    """Test orbit labels of diagonal elements."""
    from src.algebra_core import element
    from src.decompositions import rank_signature

    report = rank_signature(element(symr3, coords))
    assert report.label.name == expected
    assert not report.ambiguous


@pytest.mark.unit
def test_rank_signature_reports_boundary_ambiguity(symr2):
    """Test that an eigenvalue inside the zero band is flagged, not hidden."""
    from src.algebra_core import element
    from src.decompositions import rank_signature

    report = rank_signature(element(symr2, [1.0, 1e-12, 0.0]), tol=1e-10)
    assert report.rank == 1
    assert report.ambiguous


@pytest.mark.unit
def test_orbit_label_invariants():
    """Test 0 <= q <= p <= r."""
    from src.algebra_core import ParameterError
    from src.decompositions import OrbitLabel

    with pytest.raises(ParameterError):
        OrbitLabel(1, 2, 2)
    with pytest.raises(ParameterError):
        OrbitLabel(3, 0, 2)


@pytest.mark.unit
def test_orbit_point_signature(symr3):
    """Test that o_{p,q} lies in S_{p,q}."""
    from src.decompositions import orbit_point, rank_signature

    for p in range(4):
        for q in range(p + 1):
            label = rank_signature(orbit_point(symr3, p, q)).label
            assert (label.p, label.q) == (p, q)


@pytest.mark.unit
def test_peirce_projectors_resolve_identity(algebra):
    """Test that the Peirce projectors are idempotent and sum to the identity."""
    from src.decompositions import canonical_frame, peirce_projectors

    projectors = peirce_projectors(canonical_frame(algebra))
    total = sum(p.matrix for p in projectors.values())
    assert np.allclose(total, np.eye(algebra.dim), atol=1e-9)
    for p in projectors.values():
        assert np.allclose(p.matrix @ p.matrix, p.matrix, atol=1e-9)
    off = projectors[(1, 2)].matrix
    assert np.trace(off) == pytest.approx(algebra.degree)


@pytest.mark.unit
def test_gauss_factor_recomposes(algebra):
    """Test the real Gauss factorization on the chart domain."""
    from src.algebra_core import element
    from src.decompositions import gauss_factor, minor_k

    x = element(algebra, np.random.default_rng(8).normal(size=algebra.dim) + algebra.unit_coords)
    factors = gauss_factor(x)
    assert factors.recompose().allclose(x, 1e-8)
    assert np.prod(factors.diagonal[:1]) == pytest.approx(minor_k(x, 1), rel=1e-8)
    assert np.prod(factors.diagonal) == pytest.approx(minor_k(x, algebra.rank), rel=1e-7)


@pytest.mark.unit
def test_gauss_factor_off_domain(symr2):
    """Test ChartDomainError when Delta_1 vanishes."""
    from src.algebra_core import element
    from src.decompositions import ChartDomainError, gauss_factor

    with pytest.raises(ChartDomainError) as info:
        gauss_factor(element(symr2, [0.0, 1.0, 1.0]))
    assert info.value.index == 1


@pytest.mark.unit
def test_frobenius_rejects_wrong_block(symr2):
    """Test that tau(z) needs z in the V_1k blocks."""
    from src.algebra_core import element
    from src.decompositions import PeirceBlockError, frobenius

    with pytest.raises(PeirceBlockError):
        frobenius(element(symr2, [1.0, 0.0, 0.0]), 1)


@pytest.mark.unit
def test_frobenius_has_unit_determinant(symr3):
    """Test Det tau(z) = 1 and det(tau(z) x) = det(x)."""
    from src.algebra_core import det, element
    from src.decompositions import frobenius

    z = element(symr3, [0.0, 0.0, 0.0, 0.7, -0.4, 0.0])
    tau = frobenius(z, 1)
    x = element(symr3, np.random.default_rng(9).normal(size=6))
    assert tau.det_v == pytest.approx(1.0)
    assert det(tau(x)) == pytest.approx(det(x), rel=1e-8)


@pytest.mark.unit
def test_minors_of_symmetric_matrix(symr3):
    """Test leading and trailing principal minors against numpy."""
    from src.algebra_core import from_matrix
    from src.decompositions import dual_minor_k, minor_k

    a = np.array([[2.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 1.5]])
    x = from_matrix(symr3, a)
    assert minor_k(x, 1) == pytest.approx(2.0)
    assert minor_k(x, 2) == pytest.approx(np.linalg.det(a[:2, :2]))
    assert minor_k(x, 3) == pytest.approx(np.linalg.det(a))
    assert dual_minor_k(x, 1) == pytest.approx(1.5)
    assert dual_minor_k(x, 2) == pytest.approx(np.linalg.det(a[1:, 1:]))


@pytest.mark.unit
def test_minor_index_range(symr2):
    """Test that minor indices are 1-based."""
    from src.algebra_core import ParameterError, unit
    from src.decompositions import minor_k

    with pytest.raises(ParameterError):
        minor_k(unit(symr2), 0)


@pytest.mark.unit
def test_chart_round_trip_and_batch(algebra):
    """Test Phi(Phi^{-1}(x)) = x and the batched inverse chart."""
    from src.algebra_core import element
    from src.decompositions import chart_inverse_batch, chart_tables, phi_chart, phi_chart_inverse

    x = element(algebra, np.random.default_rng(10).normal(size=algebra.dim) + algebra.unit_coords)
    point = phi_chart_inverse(x)
    assert phi_chart(point.u, point.z, point.v).allclose(x, 1e-8)
    u, z, v = chart_inverse_batch(chart_tables(algebra), x.coords[None, :])
    assert u[0] == pytest.approx(point.u)
    assert np.allclose(z[0], point.z.coords, atol=1e-9)
    assert np.allclose(v[0], point.v.coords, atol=1e-9)


@pytest.mark.unit
def test_chart_determinant_factorizes(algebra):
    """Test det Phi(u, z, v) = u det'(v) and Delta_1 = u."""
    from src.algebra_core import det, element
    from src.decompositions import minor_k, phi_chart_inverse, subalgebra_embedding

    sub, iota = subalgebra_embedding(algebra)
    x = element(algebra, np.random.default_rng(11).normal(size=algebra.dim) + algebra.unit_coords)
    point = phi_chart_inverse(x)
    v_sub = element(sub, point.v.coords @ iota)
    assert minor_k(x, 1) == pytest.approx(point.u, rel=1e-8)
    assert det(x) == pytest.approx(point.u * det(v_sub), rel=1e-7)


@pytest.mark.unit
def test_subalgebra_embedding_is_isometric(symr3):
    """Test that iota has orthonormal columns and sends the unit to e_2 + e_3."""
    from src.decompositions import subalgebra_embedding

    sub, iota = subalgebra_embedding(symr3)
    assert sub.rank == 2
    assert np.allclose(iota.T @ iota, np.eye(sub.dim), atol=1e-10)
    assert np.allclose(iota @ sub.unit_coords, symr3.frame_coords[1] + symr3.frame_coords[2], atol=1e-10)

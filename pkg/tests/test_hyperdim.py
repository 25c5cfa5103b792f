"""n-dimensional verifiers: Kulkarni-Nomizu algebra, the auxiliary metric,
structural conditions, Gauss/Codazzi in coordinates, boundary umbilicity."""

import numpy as np
import pytest

from ricciforge.chart import GridChart
from ricciforge.curvature import GridChartN, MetricFieldN, riemann
from ricciforge.hyperdim import (SymTensorFieldN, a_compose_a, abar_metric,
                                 boundary_umbilic_check, condition_i_residual,
                                 condition_ii_residual,
                                 face_second_fundamental_form,
                                 gauss_codazzi_residual_ndim, kulkarni_nomizu,
                                 minimality_check, shape_operator)
from ricciforge.ricci2d import SpaceFormParams, Wall
from ricciforge.reconstruct import build_A
from ricciforge.curvature import gaussian_curvature
from ricciforge import surfaces


def flat_chart(n=8, dim=2):
    return GridChartN(dims=(n,) * dim, spacings=(0.1,) * dim,
                      origins=(0.0,) * dim, periodic=(False,) * dim)


def eye_metric(chart):
    dim = chart.ndim
    g = np.zeros(chart.dims + (dim, dim))
    for i in range(dim):
        g[..., i, i] = 1.0
    return MetricFieldN(chart, g)


def const_tensor(chart, diag):
    dim = chart.ndim
    a = np.zeros(chart.dims + (dim, dim))
    for i, d in enumerate(diag):
        a[..., i, i] = d
    return SymTensorFieldN(chart, a)


def sphere2_metric(n):
    th0, th1 = 0.3 * np.pi, 0.7 * np.pi
    chart = GridChartN(dims=(n, n), spacings=((th1 - th0) / (n - 1), 2 * np.pi / n),
                       origins=(th0, 0.0), periodic=(False, True))
    th, _ = chart.meshgrid()
    g = np.zeros(chart.dims + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(th) ** 2
    return MetricFieldN(chart, g)


def sphere3_metric(n):
    w0, w1 = 0.35 * np.pi, 0.65 * np.pi
    chart = GridChartN(dims=(n, n, n),
                       spacings=((w1 - w0) / (n - 1), (w1 - w0) / (n - 1), 2 * np.pi / n),
                       origins=(w0, w0, 0.0), periodic=(False, False, True))
    chi, th, _ = chart.meshgrid()
    g = np.zeros(chart.dims + (3, 3))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(chi) ** 2
    g[..., 2, 2] = (np.sin(chi) * np.sin(th)) ** 2
    return MetricFieldN(chart, g)


# ---------------------------------------------------------------------------
# Kulkarni-Nomizu product
# ---------------------------------------------------------------------------

def test_kn_identity_metric_component():
    chart = flat_chart()
    g = const_tensor(chart, (1.0, 1.0))
    kn = kulkarni_nomizu(g, g).comps
    assert kn[0, 0, 0, 1, 0, 1] == 2.0
    assert kn[0, 0, 0, 1, 1, 0] == -2.0


def test_kn_symmetric_in_factors_and_curvature_symmetries():
    rng = np.random.default_rng(5)
    chart = flat_chart(n=4, dim=3)
    mk = lambda: SymTensorFieldN(chart, rng.normal(size=chart.dims + (3, 3)))
    h, k = mk(), mk()
    hk = kulkarni_nomizu(h, k).comps
    kh = kulkarni_nomizu(k, h).comps
    np.testing.assert_array_equal(hk, kh)
    np.testing.assert_array_equal(hk, -np.einsum("...jikl->...ijkl", hk))
    np.testing.assert_array_equal(hk, -np.einsum("...ijlk->...ijkl", hk))
    np.testing.assert_array_equal(hk, np.einsum("...klij->...ijkl", hk))


def test_kn_half_gg_reproduces_sphere_curvature():
    g = sphere2_metric(32)
    ct = riemann(g)
    g_sym = SymTensorFieldN(g.chart, g.comps)
    target = 0.5 * kulkarni_nomizu(g_sym, g_sym).comps
    assert np.abs(ct.rm - target).max() < 40 * max(g.chart.spacings) ** 2


# ---------------------------------------------------------------------------
# A o A and the auxiliary metric
# ---------------------------------------------------------------------------

def test_a_compose_a_zero_and_identity():
    chart = flat_chart()
    g = eye_metric(chart)
    zero = const_tensor(chart, (0.0, 0.0))
    np.testing.assert_array_equal(a_compose_a(g, zero).comps, 0.0)
    gg = a_compose_a(g, const_tensor(chart, (1.0, 1.0)))
    np.testing.assert_allclose(gg.comps, g.comps, atol=1e-15)


def test_a_compose_a_positive_semidefinite():
    rng = np.random.default_rng(9)
    chart = flat_chart(n=5, dim=3)
    g = eye_metric(chart)
    A = SymTensorFieldN(chart, rng.normal(size=chart.dims + (3, 3)))
    aoa = a_compose_a(g, A)
    w = np.linalg.eigvalsh(aoa.comps)
    scale = np.abs(w).max()
    assert w.min() >= -1e-10 * scale


def test_clifford_a_compose_a_eigenvalues():
    data = surfaces.clifford_torus(1, 3, counts=(16, 16, 16))
    aoa = a_compose_a(data.metric, data.A)
    ginv = data.metric.inverse()
    ev = np.sort(np.real(np.linalg.eigvals(np.einsum("...ij,...jk->...ik", ginv, aoa.comps))), axis=-1)
    assert np.abs(ev - np.array([0.5, 0.5, 2.0])).max() <= 1e-10


def test_abar_round_sphere_vanishes():
    g = sphere3_metric(24)
    h2 = max(g.chart.spacings) ** 2
    # rel_tol covering the stencil noise: the equator case classifies as
    # degenerate (semidefinite), nowhere positive definite
    ab = abar_metric(g, c=1.0, rel_tol=30 * h2)
    assert np.abs(ab.gbar.comps).max() < 40 * h2
    assert not (ab.classification == 1).any()
    assert (ab.classification == 0).all()


def test_abar_flat_zero():
    chart = flat_chart(n=8, dim=3)
    ab = abar_metric(eye_metric(chart), c=0.0)
    np.testing.assert_allclose(ab.gbar.comps, 0.0, atol=1e-10)


def test_abar_clifford_eigenvalues_and_forward_identity():
    data = surfaces.clifford_torus(1, 3, counts=(32, 32, 32))
    ab = abar_metric(data.metric, c=1.0)
    assert ab.pd_mask.all()
    h2 = max(data.metric.chart.spacings) ** 2
    # gbar = A o A within stencil error (forward identity of the theorem)
    aoa = a_compose_a(data.metric, data.A)
    assert np.abs(ab.gbar.comps - aoa.comps).max() < 40 * h2
    # eigenvalues w.r.t. g
    L = np.linalg.cholesky(data.metric.comps)
    Li = np.linalg.inv(L)
    W = Li @ ab.gbar.comps @ np.swapaxes(Li, -1, -2)
    ev = np.sort(np.linalg.eigvalsh(W), axis=-1)
    assert np.abs(ev - np.array([0.5, 0.5, 2.0])).max() < 40 * h2


# ---------------------------------------------------------------------------
# conditions (i) and (ii)
# ---------------------------------------------------------------------------

def test_condition_i_constant_umbilical_flat():
    chart = flat_chart(n=8, dim=3)
    g = eye_metric(chart)
    A = const_tensor(chart, (2.0, 2.0, 2.0))
    ab = abar_metric(g, c=0.0)
    # gbar = 0 here; use A o A as the positive-definite auxiliary metric
    ab.gbar = a_compose_a(g, A)
    ab.classification = np.ones(chart.dims, dtype=np.int8)
    r = condition_i_residual(g, A, ab)
    assert r.sup <= 1e-10


def test_condition_i_clifford():
    data = surfaces.clifford_torus(1, 3, counts=(32, 32, 32))
    ab = abar_metric(data.metric, c=1.0)
    r = condition_i_residual(data.metric, data.A, ab)
    assert r.sup <= 40 * max(data.metric.chart.spacings) ** 2


def test_condition_ii_clifford():
    data = surfaces.clifford_torus(1, 3, counts=(32, 32, 32))
    ab = abar_metric(data.metric, c=1.0)
    r = condition_ii_residual(data.metric, data.A, ab, c=1.0)
    assert r.sup <= 60 * max(data.metric.chart.spacings) ** 2


def test_condition_ii_gauss_map_sphere_for_flat_ambient():
    """c = 0 data whose gbar has constant curvature one: the 2-D catenoid.
    A o A = sech^2 t delta pulls back the unit sphere metric."""
    n = 48
    m = surfaces.catenoid(-1.0, 1.0, n, n, a=1.0)
    chart = GridChartN(dims=(n, n), spacings=(m.chart.hy, m.chart.hx),
                       origins=(0.0, -1.0), periodic=(True, False))
    # axes: (theta periodic, t); conformal factor depends on t only
    tm = chart.meshgrid()[1]
    e2u = np.cosh(tm) ** 2
    g = np.zeros(chart.dims + (2, 2))
    g[..., 0, 0] = e2u
    g[..., 1, 1] = e2u
    gm = MetricFieldN(chart, g)
    A = np.zeros_like(g)
    A[..., 0, 0] = -1.0     # theta-theta slot of the catenoid shape tensor
    A[..., 1, 1] = 1.0
    ab = abar_metric(gm, c=0.0)
    assert ab.pd_mask.all()
    r = condition_ii_residual(gm, SymTensorFieldN(chart, A), ab, c=0.0)
    assert r.sup <= 60 * max(chart.spacings) ** 2


def test_condition_ii_degenerate_masked():
    chart = flat_chart(n=8, dim=2)
    g = eye_metric(chart)
    A = const_tensor(chart, (0.0, 0.0))
    ab = abar_metric(g, c=0.0)
    r = condition_ii_residual(g, A, ab, c=0.0)
    assert r.degenerate and r.passed


def test_condition_residuals_detect_perturbation_linearly():
    """A -> A + eps * theta * g: baseline-subtracted residual slope is linear
    within 20 percent over eps in {1e-3, 1e-2}."""
    data = surfaces.clifford_torus(1, 3, counts=(24, 24, 24))
    g, A, chart = data.metric, data.A, data.metric.chart
    ab = abar_metric(g, c=1.0)
    th = chart.meshgrid()[1]

    def sup_at(eps):
        pert = SymTensorFieldN(chart, A.comps + eps * th[..., None, None] * g.comps)
        return condition_i_residual(g, pert, ab, tol=1.0).sup

    base = sup_at(0.0)
    r1, r2 = sup_at(1e-3) - base, sup_at(1e-2) - base
    slope = np.log10(r2 / r1)
    assert abs(slope - 1.0) <= 0.2


# ---------------------------------------------------------------------------
# Gauss/Codazzi and minimality
# ---------------------------------------------------------------------------

def test_gauss_codazzi_round_sphere_totally_geodesic():
    g = sphere3_metric(24)
    A = SymTensorFieldN(g.chart, np.zeros(g.chart.dims + (3, 3)))
    b = gauss_codazzi_residual_ndim(g, A, c=1.0)
    assert b.passed


def test_gauss_codazzi_clifford():
    data = surfaces.clifford_torus(1, 3, counts=(32, 32, 32))
    b = gauss_codazzi_residual_ndim(data.metric, data.A, c=1.0)
    h2 = max(data.metric.chart.spacings) ** 2
    assert b.reports["gauss"].sup <= 40 * h2
    assert b.reports["codazzi"].sup <= 40 * h2


def test_gauss_residual_detects_wrong_constant_tensor():
    chart = flat_chart(n=8, dim=3)
    g = eye_metric(chart)
    A = const_tensor(chart, (1.0, -1.0, 0.0))
    b = gauss_codazzi_residual_ndim(g, A, c=0.0, tol=0.5)
    assert not b.reports["gauss"].passed      # Rm = 0 but A o A != 0
    assert b.reports["codazzi"].passed        # constant tensor, flat connection


def test_minimality_cases():
    data = surfaces.clifford_torus(1, 3, counts=(16, 16, 16))
    assert minimality_check(data.metric, data.A).sup <= 1e-12
    chart = flat_chart(n=6, dim=3)
    g = eye_metric(chart)
    r = minimality_check(g, const_tensor(chart, (1.0, 1.0, 1.0)), tol=1e-12)
    assert not r.passed and abs(r.sup - 3.0) < 1e-14
    assert minimality_check(g, const_tensor(chart, (0.0, 0.0, 0.0))).sup == 0.0


def test_two_dim_agreement_with_conformal_gauss_residual():
    """n = 2 coordinates: the ndim Gauss residual equals e^{4u} times the
    conformal one on reconstructed catenoid data."""
    n = 33
    m = surfaces.catenoid(-1.0, 1.0, n, n, a=1.0).sampled()
    from ricciforge.reconstruct import gauss_residual_2d
    from ricciforge.chart import ComplexField, ScalarField as SF
    phi = ComplexField(re=SF(m.chart, values=np.ones(m.chart.shape)),
                       im=SF(m.chart, values=np.zeros(m.chart.shape)))
    p = SpaceFormParams(c=0.0, H=0.0)
    A2 = build_A(phi, m, p)
    r2d = gauss_residual_2d(m, A2, p)

    chart = GridChartN(dims=(n, n), spacings=(m.chart.hy, m.chart.hx),
                       origins=(0.0, -1.0), periodic=(True, False))
    # 2-D samples are already (theta, t) ordered (y outer)
    e2u = np.exp(2 * m.u.values)
    g = np.zeros(chart.dims + (2, 2))
    g[..., 0, 0] = e2u
    g[..., 1, 1] = e2u
    A = np.zeros_like(g)
    A[..., 0, 0] = A2.ayy.values
    A[..., 0, 1] = A2.axy.values
    A[..., 1, 0] = A2.axy.values
    A[..., 1, 1] = A2.axx.values
    b = gauss_codazzi_residual_ndim(MetricFieldN(chart, g), SymTensorFieldN(chart, A), c=0.0)
    lhs = b.reports["gauss"].values[..., 0, 1, 0, 1]
    rhs = (e2u ** 2) * r2d.values
    assert np.abs(lhs - rhs).max() <= 60 * max(chart.spacings) ** 2


# ---------------------------------------------------------------------------
# boundary umbilicity
# ---------------------------------------------------------------------------

def test_flat_disc_boundary_umbilic_passes():
    data = surfaces.flat_disc_in_ball(3, counts=(33, 33, 32))
    face = (0, "high")
    B = face_second_fundamental_form(data.metric, face)
    bundle = boundary_umbilic_check(data.metric, data.A, B, data.params, face)
    assert bundle.passed
    assert bundle.reports["a_nu"].sup == 0.0
    h2 = max(data.metric.chart.spacings) ** 2
    assert bundle.reports["umbilicity"].sup <= 40 * h2


def test_flat_disc_sign_flip_fails():
    data = surfaces.flat_disc_in_ball(3, counts=(33, 33, 32))
    face = (0, "high")
    B = face_second_fundamental_form(data.metric, face)
    flipped = SpaceFormParams(c=0.0, H=0.0, walls={face: Wall(b=1.0, sign=-1)})
    ok = boundary_umbilic_check(data.metric, data.A, B, data.params, face, tol=0.5)
    bad = boundary_umbilic_check(data.metric, data.A, B, flipped, face, tol=0.5)
    assert ok.reports["umbilicity"].passed
    assert not bad.reports["umbilicity"].passed


def test_totally_geodesic_face_reduces_to_b_norm():
    """b = c: the umbilicity residual is just |B| on the face."""
    data = surfaces.flat_disc_in_ball(2, counts=(33, 32))
    face = (0, "high")
    B = face_second_fundamental_form(data.metric, face)
    p = SpaceFormParams(c=0.0, H=0.0, walls={face: Wall(b=0.0)})
    bundle = boundary_umbilic_check(data.metric, data.A, B, p, face, tol=1.0)
    np.testing.assert_allclose(np.abs(bundle.reports["umbilicity"].values[..., -1]),
                               np.abs(B[..., 1, 1]), atol=1e-12)


def test_face_b_matches_round_sphere_of_flat_disc():
    """The r = 1 boundary sphere of the flat ball has B = g on the face."""
    data = surfaces.flat_disc_in_ball(3, counts=(33, 33, 32))
    face = (0, "high")
    B = face_second_fundamental_form(data.metric, face)
    g_face = data.metric.comps[-1]
    h2 = max(data.metric.chart.spacings) ** 2
    for i in (1, 2):
        for j in (1, 2):
            assert np.abs(B[..., i, j] - g_face[..., i, j]).max() <= 40 * h2


def test_shape_operator_raises_index():
    chart = flat_chart(n=5, dim=2)
    g = eye_metric(chart)
    A = const_tensor(chart, (2.0, 3.0))
    ahat = shape_operator(g, A)
    np.testing.assert_allclose(ahat[..., 0, 0], 2.0, atol=0)
    np.testing.assert_allclose(ahat[..., 1, 1], 3.0, atol=0)

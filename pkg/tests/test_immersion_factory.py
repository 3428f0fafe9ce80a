import cmath
import math

import numpy as np
import pytest

from hminlag import immersion_factory as fac
from hminlag import legendre_curves as lc
from hminlag.ambient import fiber_separation, herm, liouville, riemannian
from hminlag.errors import DimensionMismatch, DomainError, SingularPointError


def rand_special_orthogonal(n, rng):
    a = rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------

def test_sphere_block_quadric_and_isotropy():
    b = fac.geodesic_sphere_block(2)
    rng = np.random.default_rng(0)
    for chart in (0, 3, 5):
        for _ in range(4):
            u = rng.uniform(-0.5, 0.5, 2)
            j = b.jet(u, chart)
            assert herm(j.value, j.value, b.signature) == pytest.approx(1.0, abs=1e-14)
            for k in range(2):
                assert abs(liouville(j.value, j.first[k], b.signature)) < 1e-14


def test_sphere_block_chart_count_and_offsets():
    b = fac.geodesic_sphere_block(2)
    assert b.chart_count == 6
    for c in range(6):
        assert b.beta_offset(c) in (0.0, math.pi)
    with pytest.raises(DomainError):
        fac.geodesic_sphere_block(0)


def test_hyperbolic_block_basics():
    b = fac.geodesic_hyperbolic_block(2)
    assert b.value(np.zeros(2))[2] == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    for _ in range(6):
        u = rng.uniform(-1.2, 1.2, 2)
        j = b.jet(u)
        assert herm(j.value, j.value, b.signature) == pytest.approx(-1.0, abs=1e-13)
        g = np.array([
            [riemannian(j.first[a], j.first[c], b.signature) for c in range(2)]
            for a in range(2)
        ])
        assert np.all(np.linalg.eigvalsh(g) > 0)   # hyperbolic metric, positive definite


def test_point_blocks():
    ps = fac.point_block("sphere")
    ph = fac.point_block("hyperbolic")
    assert herm(ps.value(np.zeros(0)), ps.value(np.zeros(0)), ps.signature) == pytest.approx(1.0)
    assert herm(ph.value(np.zeros(0)), ph.value(np.zeros(0)), ph.signature) == pytest.approx(-1.0)
    assert ps.beta_offset() == 0.0


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def test_degenerate_product_is_the_curve():
    curve = fac.gamma_delta_curve(0.7, 0, 0)
    imm = fac.product_immersion(curve, fac.point_block(), fac.point_block())
    for s in (0.0, 1.3, -2.1):
        v = imm.value(np.array([s]))
        g = lc.gamma_delta(0.7, 0, 0, s)
        assert abs(v[0] - g[0]) < 1e-15 and abs(v[1] - g[1]) < 1e-15


def test_product_ambient_mismatch():
    with pytest.raises(DimensionMismatch):
        fac.product_immersion(
            fac.gamma_delta_curve(0.7, 1, 1),
            fac.geodesic_sphere_block(1),
            fac.geodesic_hyperbolic_block(1),
        )
    with pytest.raises(DimensionMismatch):
        fac.product_immersion(
            fac.alpha_rho_curve(0.5, 1, 1),
            fac.geodesic_sphere_block(1),
            fac.geodesic_sphere_block(1),
        )


def test_product_quadric_and_pullbacks_via_analytic_jets():
    imm = fac.phi_delta(0.6, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(2))
    rng = np.random.default_rng(2)
    for _ in range(6):
        u = np.concatenate([[rng.uniform(-1, 1)], rng.uniform(-0.5, 0.5, 3)])
        j = fac.analytic_product_jet(imm, u)
        assert herm(j.value, j.value, imm.signature) == pytest.approx(1.0, abs=1e-12)
        for k in range(4):
            assert abs(liouville(j.value, j.first[k], imm.signature)) < 1e-10


def test_ads_product_quadric():
    imm = fac.product_immersion(
        fac.alpha_rho_curve(0.4, 1, 1),
        fac.geodesic_sphere_block(1),
        fac.geodesic_hyperbolic_block(1),
    )
    u = np.array([0.2, 0.3, -0.4])
    j = fac.analytic_product_jet(imm, u)
    assert herm(j.value, j.value, imm.signature) == pytest.approx(-1.0, abs=1e-12)
    for k in range(3):
        assert abs(liouville(j.value, j.first[k], imm.signature)) < 1e-10


def test_equivariance_under_block_rotations():
    imm = fac.phi_delta(0.6, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    rng = np.random.default_rng(3)
    x = np.array([math.cos(0.3), math.sin(0.3)])
    y = np.array([math.cos(-1.1), math.sin(-1.1)])
    for _ in range(5):
        A1 = rand_special_orthogonal(2, rng)
        A2 = rand_special_orthogonal(2, rng)
        bd = np.zeros((4, 4))
        bd[:2, :2], bd[2:, 2:] = A1, A2
        lhs = imm.value_raw(0.4, A1 @ x, A2 @ y)
        rhs = bd @ imm.value_raw(0.4, x, y)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_phi_delta_metadata():
    imm = fac.phi_delta(0.6, fac.geodesic_sphere_block(2), fac.geodesic_sphere_block(1))
    assert imm.metadata["mu"] == pytest.approx(lc.gamma_delta_mu(0.6, 2, 1))
    assert imm.metadata["delta0"] == pytest.approx(math.atan(math.sqrt(2 / 3)))


def test_singularity_flags():
    curve = fac.nonsolution_control_curve()
    imm = fac.product_immersion(curve, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    with pytest.raises(SingularPointError):
        imm.check_regular(np.array([0.0, 0.0, 0.0]))   # outside the stored domain / modulus margin


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def test_projected_cp_closes_over_two_pi():
    imm = fac.projected_phi_delta(0.9, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    u = np.array([0.7, 0.1, -0.2])
    u2 = u.copy()
    u2[0] += 2 * math.pi
    sep = fiber_separation(imm.value(u), imm.value(u2), imm.signature, 1)
    assert sep < 1e-12


def test_projected_cp_period_metadata():
    b1, b2 = fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1)
    imm = fac.projected_phi_delta(0.9, b1, b2)
    assert imm.metadata["period_unprojected"] == pytest.approx(2 * math.pi)  # exponents vanish at (1,1)
    imm2 = fac.projected_phi_delta(0.9, fac.geodesic_sphere_block(2), b2)
    c, s = math.cos(0.9), math.sin(0.9)
    assert imm2.metadata["period_unprojected"] == pytest.approx(2 * math.pi / c)


def test_projected_ch_level_and_closure():
    imm = fac.projected_phi_rho(0.5, fac.geodesic_sphere_block(1), fac.geodesic_hyperbolic_block(1))
    u = np.array([0.3, 0.2, 0.4])
    v = imm.value(u)
    assert herm(v, v, imm.signature) == pytest.approx(-1.0, abs=1e-12)
    u2 = u.copy()
    u2[0] += 2 * math.pi
    assert fiber_separation(v, imm.value(u2), imm.signature, -1) < 1e-12


def test_quotient_action_structure():
    act = fac.quotient_action("Z2xZ2_sphere")
    h1, h2 = act.generators
    s, x, y = 0.7, np.array([0.6, 0.8]), np.array([1.0, 0.0])
    # involutions
    s1, x1, y1 = h1(*h1(s, x, y))
    assert s1 == pytest.approx(s) and np.allclose(x1, x) and np.allclose(y1, y)
    # composition h1 h2 flips both factors and restores the angle
    sc, xc, yc = h1(*h2(s, x, y))
    assert sc == pytest.approx(s) and np.allclose(xc, -x) and np.allclose(yc, -y)
    with pytest.raises(DomainError):
        fac.quotient_action("bogus")


def test_quotient_identification_on_values():
    imm = fac.projected_phi_delta(math.pi / 3, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    act = fac.quotient_action("Z2xZ2_sphere")
    s, x, y = 0.7, np.array([math.cos(0.3), math.sin(0.3)]), np.array([math.cos(-0.9), math.sin(-0.9)])
    for g in act.elements:
        sep = fiber_separation(
            imm.value_raw(s, x, y), imm.value_raw(*g(s, x, y)), imm.signature, 1
        )
        assert sep <= 1e-10


def test_quotient_identification_hyperbolic():
    imm = fac.projected_phi_rho(0.5, fac.geodesic_sphere_block(1), fac.geodesic_hyperbolic_block(1))
    act = fac.quotient_action("Z2_hyperbolic")
    s, x = 1.2, np.array([math.cos(0.4), math.sin(0.4)])
    y = np.array([0.7, math.sqrt(1 + 0.49)])
    (h,) = act.generators
    sep = fiber_separation(imm.value_raw(s, x, y), imm.value_raw(*h(s, x, y)), imm.signature, -1)
    assert sep <= 1e-10


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

def test_cone_slice_and_singularity():
    link = fac.phi_delta(0.7, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    cn = fac.cone(link)
    u = np.array([1.0, 0.4, 0.2, -0.3])
    assert np.max(np.abs(cn.value(u) - link.value(u[1:]))) < 1e-15
    with pytest.raises(SingularPointError) as err:
        cn.check_regular(np.array([0.0, 0.4, 0.2, -0.3]))
    assert err.value.factor == "cone_radius"
    with pytest.raises(DomainError):
        fac.cone(fac.product_immersion(
            fac.alpha_rho_curve(0.4, 1, 1),
            fac.geodesic_sphere_block(1),
            fac.geodesic_hyperbolic_block(1),
        ))


def test_cone_radial_second_derivative_vanishes():
    link = fac.phi_delta(0.7, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    cn = fac.cone(link)
    j = cn.jet(np.array([1.2, 0.4, 0.2, -0.3]))
    assert np.max(np.abs(j.second[0, 0])) < 1e-14


# ---------------------------------------------------------------------------
# radial embedding representative
# ---------------------------------------------------------------------------

def test_cor10_embedding_values():
    imm = fac.minimal_embedding_cor10(0.5, 1, 1)
    v0 = imm.value(np.zeros(3))
    sh, ch = math.sinh(0.5), math.cosh(0.5)
    # chart centers: sphere chart 0 center is e_1, hyperbolic center is (0, 1)
    assert v0[0] == pytest.approx(sh, abs=1e-14)
    assert v0[3] == pytest.approx(ch, abs=1e-14)
    u = np.array([0.8, 0.2, -0.3])
    v = imm.value(u)
    assert herm(v, v, imm.signature) == pytest.approx(-1.0, abs=1e-12)


def test_cor10_matches_ode_product():
    varrho = 0.5
    imm = fac.minimal_embedding_cor10(varrho, 1, 1)
    prof = imm.curve.profile
    spec = lc.CurveSpec.ads(1, 1, 0.0, varrho)
    t_hi = prof.time_of(1.0) * 1.02 + 1e-3
    traj = lc.integrate(spec, t_hi, 1e-4, richardson=False, modulus_cap=1e9)
    for s in (0.25, 0.6, 1.0):
        (vo, _) = traj.evaluate(prof.time_of(s))
        vq = imm.curve.value(s)
        assert abs(vq[0] - vo[0]) < 1e-6
        assert abs(vq[1] - vo[1]) < 1e-6


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

def test_evaluate_jet_matches_analytic_block_jet():
    b = fac.geodesic_sphere_block(2)
    imm = b.immersion()
    u = np.array([0.25, -0.3])
    exact = b.jet(u)
    h = 1e-3
    j1 = fac.evaluate_jet(imm, u, h_first=h, h_second=1e-3)
    j2 = fac.evaluate_jet(imm, u, h_first=h / 2, h_second=1e-3)
    e1 = np.max(np.abs(j1.first - exact.first))
    e2 = np.max(np.abs(j2.first - exact.first))
    assert e1 < 5e-6
    assert 2.5 < e1 / e2 < 6.0     # order-2 stencil: ~4x per halving
    assert np.max(np.abs(j1.second - exact.second)) < 5e-4


def test_evaluate_jet_product_matches_analytic():
    imm = fac.phi_delta(0.6, fac.geodesic_sphere_block(1), fac.geodesic_sphere_block(1))
    u = np.array([0.4, 0.2, -0.3])
    ja = fac.analytic_product_jet(imm, u)
    jf = imm.jet(u)
    assert np.max(np.abs(ja.value - jf.value)) < 1e-15
    assert np.max(np.abs(ja.first - jf.first)) < 1e-7
    assert np.max(np.abs(ja.second - jf.second)) < 1e-5


def test_nested_product_block():
    inner = fac.product_immersion(fac.gamma_delta_curve(0.7, 0, 0), fac.point_block(), fac.point_block())
    blk = inner.as_block()
    assert blk.dim == 1 and blk.is_cminimal_claimed
    outer = fac.product_immersion(fac.gamma_delta_curve(0.5, 1, 1), blk, fac.geodesic_sphere_block(1))
    rng = np.random.default_rng(4)
    for _ in range(5):
        u = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)])
        j = fac.analytic_product_jet(outer, u)
        assert herm(j.value, j.value, outer.signature) == pytest.approx(1.0, abs=1e-12)
        for k in range(3):
            assert abs(liouville(j.value, j.first[k], outer.signature)) < 1e-9


def test_nested_block_beta_offset():
    inner = fac.product_immersion(
        fac.gamma_delta_curve(lc.delta_minimal(1, 1), 1, 1),
        fac.geodesic_sphere_block(1),
        fac.geodesic_sphere_block(1),
    )
    blk = inner.as_block()
    off = blk.beta_offset()
    assert off is not None
    assert off == pytest.approx((math.pi + -math.pi / 2) % (2 * math.pi), abs=1e-9)
    # a mu != 0 member has a drifting angle: no constant offset
    blk2 = fac.product_immersion(
        fac.gamma_delta_curve(0.5, 1, 1),
        fac.geodesic_sphere_block(1),
        fac.geodesic_sphere_block(1),
    ).as_block()
    assert blk2.beta_offset() is None


# ---------------------------------------------------------------------------
# config-driven construction
# ---------------------------------------------------------------------------

def test_build_from_config_products_and_cones():
    cfg = {
        "kind": "ProductSphere", "n1": 1, "n2": 1,
        "curve": {"family": "gamma_delta", "delta": 0.6},
        "blocks": [{"type": "geodesic_sphere", "n": 1}, {"type": "geodesic_sphere", "n": 1}],
    }
    imm = fac.build_from_config(cfg)
    assert imm.kind is fac.ImmersionKind.PRODUCT_SPHERE
    cone_cfg = dict(cfg, kind="Cone")
    cn = fac.build_from_config(cone_cfg)
    assert cn.kind is fac.ImmersionKind.CONE
    assert cn.metadata["special_lagrangian"] is False
    cone_min = dict(cone_cfg, curve={"family": "gamma_delta", "delta": lc.delta_minimal(1, 1)})
    assert fac.build_from_config(cone_min).metadata["special_lagrangian"] is True


def test_build_from_config_strictness():
    with pytest.raises(DomainError):
        fac.build_from_config({"kind": "ProductSphere", "n1": 1, "n2": 1, "bogus": 1})
    with pytest.raises(DomainError):
        fac.build_from_config({
            "kind": "ProductSphere", "n1": 1, "n2": 1,
            "curve": {"family": "gamma_delta", "delta": 0.6, "extra": 2},
        })
    with pytest.raises(DomainError):
        fac.build_from_config({
            "kind": "ProductSphere", "n1": 1, "n2": 1,
            "curve": {"family": "unknown"},
        })


def test_build_from_config_projected_and_quadrature():
    imm = fac.build_from_config({
        "kind": "ProjectedCH", "n1": 1, "n2": 1,
        "curve": {"family": "quadrature", "rho": 0.5},
        "blocks": [{"type": "geodesic_sphere", "n": 1}, {"type": "geodesic_hyperbolic", "n": 1}],
    })
    assert imm.metadata.get("radial") is True
    imm2 = fac.build_from_config({
        "kind": "ProjectedCP", "n1": 1, "n2": 1,
        "curve": {"family": "gamma_delta", "delta": 1.0},
        "blocks": [{"type": "geodesic_sphere", "n": 1}, {"type": "geodesic_sphere", "n": 1}],
        "quotient": "Z2xZ2_sphere",
    })
    assert imm2.metadata["quotient"] == "Z2xZ2_sphere"


def test_build_from_config_nested_block():
    imm = fac.build_from_config({
        "kind": "ProductSphere", "n1": 1, "n2": 1,
        "curve": {"family": "gamma_delta", "delta": 0.5},
        "blocks": [
            {"type": "product", "kind": "ProductSphere", "n1": 0, "n2": 0,
             "curve": {"family": "gamma_delta", "delta": 0.7},
             "blocks": [{"type": "point", "n": 0}, {"type": "point", "n": 0}]},
            {"type": "geodesic_sphere", "n": 1},
        ],
    })
    u = np.array([0.2, 0.9, 0.1])
    j = fac.analytic_product_jet(imm, u)
    assert herm(j.value, j.value, imm.signature) == pytest.approx(1.0, abs=1e-12)

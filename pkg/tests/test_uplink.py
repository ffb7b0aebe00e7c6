import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinching_noma.downlink import DownlinkOmaConfig, dl_oma_er, dl_oma_op, dl_oma_zero_op_snr
from pinching_noma.model import GainDistribution, SystemGeometry, DEFAULT_GEOMETRY
from pinching_noma.quadrature import ChebyshevRule, integrate_adaptive
from pinching_noma.sweep import fit_slope
from pinching_noma.uplink import (
    G as G_fn,
    UplinkNomaRegime,
    UplinkNomaTwoUserConfig,
    _minus_G_difference,
    delta2,
    i9,
    ul_noma2_er_asymptotic,
    ul_noma2_er_slope_user1,
    ul_noma2_er_user1,
    ul_noma2_er_user2,
    ul_noma2_er_user2_reference,
    ul_noma2_op_asymptotic,
    ul_noma2_op_reference,
    ul_noma2_op_terms,
    ul_noma2_op_user1,
    ul_noma2_op_user2,
    ul_noma2_zero_op_snr,
    ul_oma_er,
    ul_oma_er_asymptotic,
    ul_oma_op,
    xi2,
    xi4,
)

from oracles import i9_ref, i_terms_ref, xi2_ref

GEO = DEFAULT_GEOMETRY
DIST = GainDistribution(GEO)
AUDIT_RULE = ChebyshevRule(1 << 20)


def cfg(R1, R2, db, rule=None, g=GEO):
    rule = rule or ChebyshevRule(100)
    return UplinkNomaTwoUserConfig(g, (R1, R2), 10 ** (db / 10), rule)


# -- OMA -----------------------------------------------------------------------------

@given(st.integers(1, 5), st.floats(0.05, 2.0), st.floats(0, 130))
def test_oma_mirrors_downlink(M, R, db):
    rho = 10 ** (db / 10)
    assert ul_oma_op(GEO, M, R, rho) == dl_oma_op(DownlinkOmaConfig(GEO, M, R, rho))
    assert ul_oma_er(GEO, M, rho) == dl_oma_er(DownlinkOmaConfig(GEO, M, R, rho))


def test_oma_threshold_symmetry():
    assert ul_oma_op(GEO, 2, 0.5, dl_oma_zero_op_snr(GEO, 2, 0.5)) == 0.0


def test_oma_room_size_ordering_and_slopes():
    wide = SystemGeometry(room_side=50)
    for db in range(0, 121, 10):
        rho = 10 ** (db / 10)
        assert ul_oma_er(GEO, 2, rho) > ul_oma_er(wide, 2, rho)
    s20 = (ul_oma_er_asymptotic(GEO, 2, 1e14) - ul_oma_er_asymptotic(GEO, 2, 1e12)) / (2 * math.log2(10))
    s50 = (ul_oma_er_asymptotic(wide, 2, 1e14) - ul_oma_er_asymptotic(wide, 2, 1e12)) / (2 * math.log2(10))
    assert s20 == pytest.approx(s50, rel=1e-3)


# -- regimes and configuration ------------------------------------------------------------

def test_regime_classification():
    assert UplinkNomaRegime.classify(0.99) is UplinkNomaRegime.BELOW_ONE
    assert UplinkNomaRegime.classify(1.0) is UplinkNomaRegime.AT_ONE
    assert UplinkNomaRegime.classify(1.01) is UplinkNomaRegime.ABOVE_ONE
    assert cfg(0.5, 0.5, 80).c > 0
    assert cfg(0.5, 1.5, 80).c < 0
    assert cfg(0.5, 1.0, 80).c is None


def test_config_validation():
    with pytest.raises(ValueError):
        UplinkNomaTwoUserConfig(GEO, (0.5,), 1.0)
    with pytest.raises(ValueError):
        UplinkNomaTwoUserConfig(GEO, (0.5, 0.0), 1.0)
    with pytest.raises(ValueError):
        UplinkNomaTwoUserConfig(GEO, (0.5, 0.5), -1.0)


# -- outage ---------------------------------------------------------------------------------

def test_user1_short_circuit():
    c = cfg(3.0, 0.5, 60)
    assert c.omega1 >= GEO.b
    assert ul_noma2_op_user1(c) == 1.0


def test_below_one_vanishes_past_threshold():
    R2 = 0.99
    thr = ul_noma2_zero_op_snr(GEO, R2)
    assert thr == pytest.approx((2**R2 - 1) / (GEO.a * (2 - 2**R2)), rel=1e-14)
    c = UplinkNomaTwoUserConfig(GEO, (0.5, R2), thr * 1.0001)
    assert c.omega1 < GEO.a
    assert ul_noma2_op_user1(c) == pytest.approx(0.0, abs=1e-12)
    assert ul_noma2_op_user2(c) == pytest.approx(0.0, abs=1e-12)
    assert ul_noma2_op_user2(UplinkNomaTwoUserConfig(GEO, (0.5, R2), thr * 0.95)) > 0


def test_user2_vanishes_for_tiny_target():
    for db in (40, 70, 100):
        assert ul_noma2_op_user2(cfg(0.5, 1e-9, db)) == pytest.approx(0.0, abs=1e-7)


# reference values from adaptive quadrature of the defining integrals
P2_AT_ONE = {90: 0.01372573780122921, 100: 0.0015071592169842996,
             110: 0.0001634256876199558, 120: 1.7605947754573137e-05}


@pytest.mark.parametrize("db", sorted(P2_AT_ONE))
def test_reference_at_one(db):
    p1, p2 = ul_noma2_op_reference(cfg(0.5, 1.0, db))
    assert p2 == pytest.approx(P2_AT_ONE[db], rel=1e-8)
    assert p1 == pytest.approx(p2, rel=1e-8)


@given(st.floats(0.05, 2.5), st.floats(0.05, 2.5), st.floats(55, 125))
def test_cg_outage_close_to_reference(R1, R2, db):
    c = cfg(R1, R2, db)
    p1, p2 = ul_noma2_op_reference(c)
    # n=100 carries ~1e-4 absolute quadrature error near the upper support edge
    assert ul_noma2_op_user1(c) == pytest.approx(p1, abs=5e-4)
    assert ul_noma2_op_user2(c) == pytest.approx(p2, abs=5e-4)


def test_above_one_floor():
    c = cfg(0.5, 1.01, 120)
    floor = ul_noma2_op_asymptotic(c)
    assert floor.regime is UplinkNomaRegime.ABOVE_ONE
    assert floor.value == pytest.approx(1 - i9(c))
    assert abs(ul_noma2_op_user2(c) - floor.value) <= 1e-3
    assert abs(ul_noma2_op_user1(c) - floor.value) <= 1e-3
    # the floor is the rho -> inf limit of the reference outage
    fine = 1 - i9(cfg(0.5, 1.01, 120, AUDIT_RULE))
    assert ul_noma2_op_reference(cfg(0.5, 1.01, 200))[1] == pytest.approx(fine, abs=1e-9)


def test_at_one_decay():
    dbs = np.linspace(90, 120, 13)
    asym = [ul_noma2_op_asymptotic(cfg(0.5, 1.0, d)).value for d in dbs]
    assert fit_slope(dbs, asym, log_log=True, window_db=30) == pytest.approx(-1.0, abs=0.05)
    exact = [ul_noma2_op_reference(cfg(0.5, 1.0, d))[1] for d in dbs]
    assert fit_slope(dbs, exact, log_log=True, window_db=30) == pytest.approx(-1.0, abs=0.05)
    meta = ul_noma2_op_asymptotic(cfg(0.5, 1.0, 100))
    assert meta.decay_exponent == -1.0


@pytest.mark.parametrize("R2", [0.7, 0.99, 1.0])
def test_outage_nonincreasing_in_rho(R2):
    dbs = np.arange(60, 125, 2.5)
    for user in (0, 1):
        ref = [ul_noma2_op_reference(cfg(0.5, R2, d))[user] for d in dbs]
        assert np.all(np.diff(ref) <= 1e-12)
    cg = [ul_noma2_op_user2(cfg(0.5, R2, d)) for d in dbs]
    assert np.all(np.diff(cg) <= 2e-4)


@pytest.mark.parametrize("db", [70, 80, 90, 100, 110])
def test_regime_continuity(db):
    at = ul_noma2_op_user2(cfg(0.5, 1.0, db))
    for R2 in (1 - 1e-9, 1 + 1e-9):
        assert ul_noma2_op_user2(cfg(0.5, R2, db)) == pytest.approx(at, abs=1e-3)
        assert ul_noma2_op_user1(cfg(0.5, R2, db)) == pytest.approx(ul_noma2_op_user1(cfg(0.5, 1.0, db)), abs=1e-3)


def test_users_share_limit():
    for R2 in (0.99, 1.01):
        c = cfg(0.5, R2, 130)
        assert ul_noma2_op_user1(c) == pytest.approx(ul_noma2_op_user2(c), abs=1e-9)


def test_clamp_is_logged(caplog):
    coarse = ChebyshevRule(3)
    with caplog.at_level(logging.DEBUG, logger="pinching_noma.uplink"):
        values = [ul_noma2_op_user2(cfg(0.5, 1.0, d, coarse)) for d in (100, 110, 120)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert any("clamped" in r.message for r in caplog.records)


# -- I-term audits against the defining integrals ---------------------------------------------

def audit_i_terms(R1, R2, db):
    c = cfg(R1, R2, db, AUDIT_RULE)
    got = ul_noma2_op_terms(c)._asdict()
    for name, ref in i_terms_ref(c).items():
        assert got[name] == pytest.approx(ref, rel=1e-6, abs=1e-300), name


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(55, 130))
def test_i_terms_match_defining_integrals(R1, R2, db):
    audit_i_terms(R1, R2, db)


@pytest.mark.parametrize("db", [60, 90, 120])
def test_i_terms_at_one(db):
    audit_i_terms(0.5, 1.0, db)


@given(st.floats(1.001, 3.0))
def test_i9_matches_limit_integral(R2):
    c = UplinkNomaTwoUserConfig(GEO, (0.5, R2), 1e6, AUDIT_RULE)
    ref = i9_ref(c)
    assert i9(c) == pytest.approx(ref, rel=1e-6)


# -- ergodic rate -------------------------------------------------------------------------------

def test_user1_rate_oracle():
    # adaptive quadrature over the weaker user's offset, frozen
    assert ul_noma2_er_user1(cfg(0.5, 0.5, 60)) == pytest.approx(0.12544895350166396, abs=1e-8)
    ref = integrate_adaptive(
        lambda y: math.log2(1 + 1e6 * y) * 2 * DIST.pdf(y) * DIST.sf(y), GEO.a, GEO.b, tol=1e-12
    )
    assert ul_noma2_er_user1(cfg(0.5, 0.5, 60)) == pytest.approx(ref, abs=1e-8)


@given(st.floats(-20, 100))
def test_stable_G_difference_matches_printed_form(db):
    rho = 10 ** (db / 10)
    printed = -(G_fn(GEO.b, rho) - G_fn(GEO.a, rho))
    stable = _minus_G_difference(GEO.a, GEO.b, rho)
    assert stable == pytest.approx(printed, rel=1e-7)


def test_user1_rate_limits_and_slope():
    assert ul_noma2_er_user1(cfg(0.5, 0.5, -100)) < 1e-9
    assert ul_noma2_er_slope_user1(GEO) == pytest.approx(1.0, abs=1e-12)
    for g in (SystemGeometry(room_side=50), SystemGeometry(height=2.0, carrier_freq=3e9)):
        assert ul_noma2_er_slope_user1(g) == pytest.approx(1.0, abs=1e-12)
    a1 = ul_noma2_er_asymptotic(cfg(0.5, 0.5, 140)).user1
    a0 = ul_noma2_er_asymptotic(cfg(0.5, 0.5, 120)).user1
    assert (a1 - a0) / (2 * math.log2(10)) == pytest.approx(1.0, abs=1e-12)


def test_delta2_printed_form():
    a, b = GEO.a, GEO.b
    assert delta2(GEO) == pytest.approx(math.log(a) / a - math.log(b) / b + 1 / a - 1 / b, rel=1e-14)


def test_user2_rate_against_nested_quadrature():
    c = cfg(0.5, 0.5, 60)
    ref = ul_noma2_er_user2_reference(c)
    assert ref == pytest.approx(0.1959011756280655, rel=1e-10)
    assert ul_noma2_er_user2(c) == pytest.approx(ref, rel=1e-4)


def test_user2_rate_converges_with_n():
    ref = 1.5164448246635407  # nested adaptive quadrature at 120 dB
    errs = [abs(ul_noma2_er_user2(cfg(0.5, 0.5, 120, ChebyshevRule(n))) / ref - 1) for n in (100, 400, 1600)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_user2_rate_limits():
    assert ul_noma2_er_user2(cfg(0.5, 0.5, -60)) < 1e-6
    c = cfg(0.5, 0.5, 120)
    asym = ul_noma2_er_asymptotic(c)
    assert abs(ul_noma2_er_user2(c) - asym.user2) <= 1e-3
    assert abs(ul_noma2_er_user1(c) - asym.user1) <= 1e-2
    assert ul_noma2_er_asymptotic(cfg(0.5, 0.5, 80)).user2 == asym.user2


@given(st.floats(0.001, 0.999), st.floats(40, 130))
def test_xi2_is_inner_expectation(u, db):
    rho = 10 ** (db / 10)
    x = GEO.a + u * (GEO.b - GEO.a)
    ref = xi2_ref(GEO, x, rho)
    assert xi2(GEO, x, rho) == pytest.approx(ref, rel=1e-9, abs=1e-13)


@given(st.floats(0.001, 0.999))
def test_xi4_is_limit_of_xi2(u):
    x = GEO.a + u * (GEO.b - GEO.a)
    assert xi2(GEO, x, 1e20) == pytest.approx(xi4(GEO, x), rel=1e-9)

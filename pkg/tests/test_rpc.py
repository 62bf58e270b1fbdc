"""RPC model tests: coefficient ordering, round trips through the dict
form, and a least-squares fit against a known synthetic projection."""

import numpy as np
import pytest

from satsplat.geocam.rpc import RPCModel, _poly_terms, fit_rpc


def unit_rpc(**overrides):
    """RPC with constant-1 denominators, zero numerators, unit scales."""
    zeros = np.zeros(20)
    den = np.zeros(20)
    den[0] = 1.0
    kw = dict(
        line_num=zeros.copy(), line_den=den.copy(),
        samp_num=zeros.copy(), samp_den=den.copy(),
        line_off=0.0, line_scale=1.0, samp_off=0.0, samp_scale=1.0,
        lat_off=0.0, lat_scale=1.0, lon_off=0.0, lon_scale=1.0,
        alt_off=0.0, alt_scale=1.0,
    )
    kw.update(overrides)
    return RPCModel(**kw)


def test_term_order():
    # Term index -> monomial, spot checked against the RPC00B convention.
    L, P, H = 0.3, -0.5, 0.7
    t = _poly_terms(np.float64(L), np.float64(P), np.float64(H))
    expected = [1.0, L, P, H, L * P, L * H, P * H, L * L, P * P, H * H,
                L * P * H, L**3, L * P * P, L * H * H, L * L * P,
                P**3, P * H * H, L * L * H, P * P * H, H**3]
    np.testing.assert_allclose(t, expected, rtol=1e-15)


def test_identity_coefficients():
    # line = normalized lat (term P, index 2), samp = normalized lon (L, 1).
    line_num = np.zeros(20)
    line_num[2] = 1.0
    samp_num = np.zeros(20)
    samp_num[1] = 1.0
    rpc = unit_rpc(line_num=line_num, samp_num=samp_num)
    col, row = rpc.project(0.25, -0.125, 3.0)
    assert col == pytest.approx(0.25)
    assert row == pytest.approx(-0.125)


def test_zero_argument_constant_terms():
    rng = np.random.default_rng(7)
    line_num = rng.normal(size=20)
    samp_num = rng.normal(size=20)
    rpc = unit_rpc(line_num=line_num, samp_num=samp_num,
                   line_off=100.0, line_scale=50.0,
                   samp_off=200.0, samp_scale=25.0,
                   lon_off=2.5, lat_off=48.5, alt_off=120.0)
    # At the offset point every monomial except the constant vanishes.
    col, row = rpc.project(2.5, 48.5, 120.0)
    assert row == pytest.approx(100.0 + 50.0 * line_num[0])
    assert col == pytest.approx(200.0 + 25.0 * samp_num[0])


def test_dict_roundtrip():
    rng = np.random.default_rng(3)
    rpc = unit_rpc(line_num=rng.normal(size=20), samp_num=rng.normal(size=20),
                   lon_off=2.3, lon_scale=0.01, lat_off=48.8, lat_scale=0.01,
                   alt_off=60.0, alt_scale=40.0,
                   line_off=512.0, line_scale=512.0,
                   samp_off=512.0, samp_scale=512.0)
    d = rpc.to_dict()
    assert d["LINE_NUM_COEFF_1"] == rpc.line_num[0]
    assert d["HEIGHT_SCALE"] == 40.0
    back = RPCModel.from_dict(d)
    pts = np.random.default_rng(0).uniform(-1, 1, size=(30, 3))
    lon, lat, alt = 2.3 + 0.01 * pts[:, 0], 48.8 + 0.01 * pts[:, 1], 60 + 40 * pts[:, 2]
    np.testing.assert_allclose(np.stack(back.project(lon, lat, alt)),
                               np.stack(rpc.project(lon, lat, alt)), rtol=1e-14)


def test_missing_key_raises():
    d = unit_rpc().to_dict()
    del d["SAMP_NUM_COEFF_13"]
    with pytest.raises(KeyError):
        RPCModel.from_dict(d)


def oblique_projector(lon, lat, alt):
    """Synthetic camera: oblique orthographic in local meters plus a mild
    quadratic distortion, the shape RPCs exist to encode."""
    # Local tangent-plane meters around the scene center.
    x = (np.asarray(lon) - 2.36) * 111320.0 * np.cos(np.radians(48.85))
    y = (np.asarray(lat) - 48.85) * 111320.0
    z = np.asarray(alt) - 80.0
    # View direction 20 degrees off nadir: shift by z * tan(20).
    xs = x + z * np.tan(np.radians(20.0))
    ys = y + z * 0.1
    col = xs / 0.5 + 256.0
    row = -ys / 0.5 + 256.0
    r2 = (col - 256.0) ** 2 + (row - 256.0) ** 2
    return col + 1.5e-7 * r2, row - 1.0e-7 * r2


def test_fit_reproduces_synthetic_projection():
    rng = np.random.default_rng(11)
    lon = 2.36 + rng.uniform(-1, 1, 4000) * 128.0 / (111320.0 * np.cos(np.radians(48.85)))
    lat = 48.85 + rng.uniform(-1, 1, 4000) * 128.0 / 111320.0
    alt = 80.0 + rng.uniform(-1, 1, 4000) * 20.0
    col, row = oblique_projector(lon, lat, alt)

    rpc = fit_rpc(lon, lat, alt, col, row)

    # Validation on fresh points from the same box.
    lon_v = 2.36 + rng.uniform(-1, 1, 500) * 128.0 / (111320.0 * np.cos(np.radians(48.85)))
    lat_v = 48.85 + rng.uniform(-1, 1, 500) * 128.0 / 111320.0
    alt_v = 80.0 + rng.uniform(-1, 1, 500) * 20.0
    col_v, row_v = oblique_projector(lon_v, lat_v, alt_v)
    col_p, row_p = rpc.project(lon_v, lat_v, alt_v)
    err = np.hypot(col_p - col_v, row_p - row_v)
    assert err.max() < 0.01


def test_degenerate_denominator_raises():
    bad_den = np.zeros(20)
    bad_den[0] = 1e-13
    rpc = unit_rpc(line_den=bad_den)
    with pytest.raises(ZeroDivisionError):
        rpc.project(0.1, 0.1, 0.0)

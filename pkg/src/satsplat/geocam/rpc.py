"""Rational polynomial camera model (RPC00B convention).

An RPC maps geodetic coordinates to image coordinates through ratios of
cubic polynomials in normalized longitude L, latitude P and altitude H:

    col = samp_off + samp_scale * num_s(L,P,H) / den_s(L,P,H)
    row = line_off + line_scale * num_l(L,P,H) / den_l(L,P,H)

The 20 coefficients of each polynomial follow the RPC00B term order:

    1, L, P, H, LP, LH, PH, L^2, P^2, H^2, LPH,
    L^3, LP^2, LH^2, L^2P, P^3, PH^2, L^2H, P^2H, H^3
"""

from dataclasses import dataclass, field

import numpy as np

_COEFF_KEYS = ("LINE_NUM_COEFF", "LINE_DEN_COEFF", "SAMP_NUM_COEFF", "SAMP_DEN_COEFF")
_SCALAR_KEYS = (
    "LINE_OFF", "SAMP_OFF", "LAT_OFF", "LONG_OFF", "HEIGHT_OFF",
    "LINE_SCALE", "SAMP_SCALE", "LAT_SCALE", "LONG_SCALE", "HEIGHT_SCALE",
)


def _poly_terms(L, P, H):
    """Stack the 20 RPC00B monomials along the last axis."""
    one = np.ones_like(L)
    return np.stack([
        one, L, P, H,
        L * P, L * H, P * H,
        L * L, P * P, H * H,
        L * P * H,
        L**3, L * P * P, L * H * H, L * L * P,
        P**3, P * H * H, L * L * H, P * P * H, H**3,
    ], axis=-1)


def _apply_poly(coeffs, L, P, H):
    return _poly_terms(L, P, H) @ np.asarray(coeffs, dtype=float)


@dataclass
class RPCModel:
    """RPC00B camera: 4 x 20 polynomial coefficients plus normalizers."""

    line_num: np.ndarray
    line_den: np.ndarray
    samp_num: np.ndarray
    samp_den: np.ndarray
    line_off: float
    line_scale: float
    samp_off: float
    samp_scale: float
    lat_off: float
    lat_scale: float
    lon_off: float
    lon_scale: float
    alt_off: float
    alt_scale: float

    def __post_init__(self):
        for name in ("line_num", "line_den", "samp_num", "samp_den"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (20,):
                raise ValueError("%s must have 20 coefficients, got %s" % (name, arr.shape))
            setattr(self, name, arr)

    def project(self, lon, lat, alt):
        """Geodetic (degrees, meters) to image (col, row) in pixels."""
        L = (np.asarray(lon, dtype=float) - self.lon_off) / self.lon_scale
        P = (np.asarray(lat, dtype=float) - self.lat_off) / self.lat_scale
        H = (np.asarray(alt, dtype=float) - self.alt_off) / self.alt_scale
        samp_den = _apply_poly(self.samp_den, L, P, H)
        line_den = _apply_poly(self.line_den, L, P, H)
        if np.any(np.abs(samp_den) < 1e-12) or np.any(np.abs(line_den) < 1e-12):
            raise ZeroDivisionError("RPC denominator vanishes inside the query box")
        col_n = _apply_poly(self.samp_num, L, P, H) / samp_den
        row_n = _apply_poly(self.line_num, L, P, H) / line_den
        return col_n * self.samp_scale + self.samp_off, row_n * self.line_scale + self.line_off

    def to_dict(self):
        """Flat RPC00B-keyed dict (JSON friendly)."""
        d = {}
        for key, arr in zip(_COEFF_KEYS, (self.line_num, self.line_den, self.samp_num, self.samp_den)):
            for i in range(20):
                d["%s_%d" % (key, i + 1)] = float(arr[i])
        d["LINE_OFF"] = self.line_off
        d["LINE_SCALE"] = self.line_scale
        d["SAMP_OFF"] = self.samp_off
        d["SAMP_SCALE"] = self.samp_scale
        d["LAT_OFF"] = self.lat_off
        d["LAT_SCALE"] = self.lat_scale
        d["LONG_OFF"] = self.lon_off
        d["LONG_SCALE"] = self.lon_scale
        d["HEIGHT_OFF"] = self.alt_off
        d["HEIGHT_SCALE"] = self.alt_scale
        return d

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in _SCALAR_KEYS if k not in d]
        for key in _COEFF_KEYS:
            missing += ["%s_%d" % (key, i + 1) for i in range(20)
                        if "%s_%d" % (key, i + 1) not in d]
        if missing:
            raise KeyError("RPC dict missing keys: %s" % ", ".join(missing[:5]))
        coeffs = {key.lower(): np.array([float(d["%s_%d" % (key, i + 1)]) for i in range(20)])
                  for key in _COEFF_KEYS}
        return cls(
            line_num=coeffs["line_num_coeff"],
            line_den=coeffs["line_den_coeff"],
            samp_num=coeffs["samp_num_coeff"],
            samp_den=coeffs["samp_den_coeff"],
            line_off=float(d["LINE_OFF"]),
            line_scale=float(d["LINE_SCALE"]),
            samp_off=float(d["SAMP_OFF"]),
            samp_scale=float(d["SAMP_SCALE"]),
            lat_off=float(d["LAT_OFF"]),
            lat_scale=float(d["LAT_SCALE"]),
            lon_off=float(d["LONG_OFF"]),
            lon_scale=float(d["LONG_SCALE"]),
            alt_off=float(d["HEIGHT_OFF"]),
            alt_scale=float(d["HEIGHT_SCALE"]),
        )


def fit_rpc(lon, lat, alt, col, row):
    """Least-squares RPC fit to projection samples, denominators fixed to 1.

    Degenerate denominators are never needed for the smooth, near-affine
    viewing geometries this package generates, and keeping them at 1 makes
    the fit a single linear solve per image axis.

    Args:
        lon, lat, alt: 1-D arrays of geodetic sample points.
        col, row: 1-D arrays of the image coordinates they map to.

    Returns:
        RPCModel reproducing the samples (exactly, if they come from a
        polynomial of degree <= 3 over the normalized domain).
    """
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    alt = np.asarray(alt, dtype=float)
    col = np.asarray(col, dtype=float)
    row = np.asarray(row, dtype=float)

    def offset_scale(v):
        off = 0.5 * (v.max() + v.min())
        scale = max(0.5 * (v.max() - v.min()), 1e-9)
        return float(off), float(scale)

    lon_off, lon_scale = offset_scale(lon)
    lat_off, lat_scale = offset_scale(lat)
    alt_off, alt_scale = offset_scale(alt)
    samp_off, samp_scale = offset_scale(col)
    line_off, line_scale = offset_scale(row)

    terms = _poly_terms((lon - lon_off) / lon_scale,
                        (lat - lat_off) / lat_scale,
                        (alt - alt_off) / alt_scale)
    samp_num, *_ = np.linalg.lstsq(terms, (col - samp_off) / samp_scale, rcond=None)
    line_num, *_ = np.linalg.lstsq(terms, (row - line_off) / line_scale, rcond=None)

    unit_den = np.zeros(20)
    unit_den[0] = 1.0
    return RPCModel(
        line_num=line_num, line_den=unit_den.copy(),
        samp_num=samp_num, samp_den=unit_den.copy(),
        line_off=line_off, line_scale=line_scale,
        samp_off=samp_off, samp_scale=samp_scale,
        lat_off=lat_off, lat_scale=lat_scale,
        lon_off=lon_off, lon_scale=lon_scale,
        alt_off=alt_off, alt_scale=alt_scale,
    )

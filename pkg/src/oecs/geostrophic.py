"""Geostrophic surface velocity from sea-surface height.

Output units are degrees of longitude and latitude per day, so the result
can be fed to the same tensor and advection code as any other field on a
lon/lat grid. With ``lon`` = phi and ``lat`` = theta (radians)::

    dphi/dt   = -g / (R**2 f cos(theta)) dh/dtheta
    dtheta/dt =  g / (R**2 f cos(theta)) dh/dphi,      f = 2 Omega sin(theta)

gives rad/s; multiplying by ``180 / pi * 86400`` converts to deg/day.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, EquatorBand
from .grid_field import GridAxis, GriddedField

SECONDS_PER_DAY = 86400.0
RAD_S_TO_DEG_DAY = 180.0 / np.pi * SECONDS_PER_DAY


@dataclass(frozen=True)
class GeoConstants:
    g: float = 9.81
    R: float = 6.371e6
    Omega: float = 7.2921e-5

    def __post_init__(self):
        for name in ("g", "R", "Omega"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def coriolis(self, lat_deg):
        return 2 * self.Omega * np.sin(np.radians(lat_deg))


@dataclass(frozen=True)
class SshGrid:
    """Sea-surface height ``h`` (m) with shape ``(nt, nlat, nlon)``.

    Longitude and latitude are in degrees, time in days; ``t_axis`` is None
    for a single snapshot.
    """

    lon: GridAxis
    lat: GridAxis
    t_axis: GridAxis | None
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim == 2:
            h = h[None]
        nt = 1 if self.t_axis is None else self.t_axis.count
        if h.shape != (nt, self.lat.count, self.lon.count):
            raise DataError(f"h must have shape {(nt, self.lat.count, self.lon.count)}, "
                            f"got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise DataError("sea-surface height must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)


def _check_band(ssh, cutoff):
    lat = ssh.lat.coords
    # f vanishes on the equator itself whatever the cutoff
    if np.any(np.abs(lat) < cutoff) or np.any(lat == 0):
        raise EquatorBand(f"latitudes within {cutoff} deg of the equator "
                          f"(grid spans {lat.min():g} to {lat.max():g})")


def _derivatives(ssh):
    # per radian; central differences inside, one-sided at the edges
    dh_dlat = np.gradient(ssh.h, np.radians(ssh.lat.step), axis=1)
    dh_dlon = np.gradient(ssh.h, np.radians(ssh.lon.step), axis=2)
    return dh_dlon, dh_dlat


def geostrophic_velocity(ssh, constants=None, equator_cutoff=5.0):
    """Angular geostrophic velocity in deg/day as a :class:`GriddedField`.

    Raises
    ------
    EquatorBand
        If any latitude lies within ``equator_cutoff`` degrees of the equator.
    """
    c = GeoConstants() if constants is None else constants
    _check_band(ssh, equator_cutoff)
    dh_dlon, dh_dlat = _derivatives(ssh)
    theta = np.radians(ssh.lat.coords)[None, :, None]
    k = c.g / (c.R ** 2 * 2 * c.Omega * np.sin(theta) * np.cos(theta))
    u = -k * dh_dlat * RAD_S_TO_DEG_DAY
    v = k * dh_dlon * RAD_S_TO_DEG_DAY
    return GriddedField(ssh.lon, ssh.lat, ssh.t_axis, u, v)


def geostrophic_velocity_si(ssh, constants=None, equator_cutoff=5.0):
    """Eastward and northward geostrophic velocity in m/s.

    Uses metric distances ``dx = R cos(theta) dphi``, ``dy = R dtheta``:
    ``u = -(g / f) dh/dy`` and ``v = (g / f) dh/dx``.
    """
    c = GeoConstants() if constants is None else constants
    _check_band(ssh, equator_cutoff)
    dh_dlon, dh_dlat = _derivatives(ssh)
    lat = ssh.lat.coords[None, :, None]
    f = c.coriolis(lat)
    dh_dy = dh_dlat / c.R
    dh_dx = dh_dlon / (c.R * np.cos(np.radians(lat)))
    return -c.g / f * dh_dy, c.g / f * dh_dx


def si_to_angular(u, v, lat_deg, constants=None):
    """Convert m/s to (deg lon/day, deg lat/day) at latitude ``lat_deg``."""
    c = GeoConstants() if constants is None else constants
    lat = np.asarray(lat_deg, dtype=float)
    dphi = u / (c.R * np.cos(np.radians(lat)))
    dtheta = v / c.R
    return np.degrees(dphi) * SECONDS_PER_DAY, np.degrees(dtheta) * SECONDS_PER_DAY

"""Periodic orbits of the planar three-disk billiard.

Three disks of radius ``a`` sit at the corners of an equilateral triangle of
side ``R``.  A periodic orbit with symbol sequence ``s_1 ... s_n`` is a
critical point of the total path length over bounce angles on the
corresponding disks; its stability comes from the product of free-flight
and mirror matrices of the linearised flow.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from trappedset.errors import ConfigurationError
from trappedset.orbits import LengthSpectrum, Model, OrbitCode, PeriodicOrbit, descriptor_hash

LOGGER = logging.getLogger(__name__)

MAX_NEWTON_ITER = 200


@dataclass(frozen=True)
class ThreeDiskConfig:
    center_separation: float
    disk_radius: float

    def __post_init__(self):
        if not (self.disk_radius > 0 and self.center_separation > 2 * self.disk_radius):
            raise ConfigurationError(
                f"need R > 2a > 0, got R={self.center_separation}, a={self.disk_radius}"
            )

    @property
    def centers(self) -> np.ndarray:
        """Disk centres indexed 1..3 (row 0 unused)."""
        rho = self.center_separation / math.sqrt(3.0)
        ang = [math.pi / 2 + 2 * math.pi * k / 3 for k in range(3)]
        c = np.zeros((4, 2))
        for k in range(3):
            c[k + 1] = (rho * math.cos(ang[k]), rho * math.sin(ang[k]))
        return c

    def descriptor(self) -> str:
        return descriptor_hash(f"three_disk:{self.center_separation!r}:{self.disk_radius!r}")


@dataclass(frozen=True)
class BilliardOrbit:
    """A solved periodic orbit: bounce geometry plus linear stability."""

    code: tuple[int, ...]
    angles: np.ndarray
    points: np.ndarray
    length: float
    monodromy: np.ndarray
    converged: bool
    iterations: int

    @property
    def trace(self) -> float:
        return float(np.trace(self.monodromy))

    @property
    def expanding_multiplier(self) -> float:
        t = self.trace
        disc = math.sqrt(t * t - 4.0)
        return (t + math.copysign(disc, t)) / 2.0

    @property
    def stability_det_abs(self) -> float:
        return abs(2.0 - self.trace)


def _geometry(cfg: ThreeDiskConfig, code, theta):
    c = cfg.centers[list(code)]
    n = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    p = c + cfg.disk_radius * n
    d = np.roll(p, -1, axis=0) - p
    rho = np.linalg.norm(d, axis=1)
    e = d / rho[:, None]
    return n, p, rho, e


def _grad_hess(cfg: ThreeDiskConfig, code, theta):
    a = cfg.disk_radius
    n, p, rho, e = _geometry(cfg, code, theta)
    t = a * np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    m = len(code)
    grad = np.zeros(m)
    hess = np.zeros((m, m))
    eye = np.eye(2)
    # segment i joins bounce i to bounce i+1
    for i in range(m):
        j = (i + 1) % m
        proj = (eye - np.outer(e[i], e[i])) / rho[i]
        grad[i] -= e[i] @ t[i]
        grad[j] += e[i] @ t[j]
        hess[i, i] += t[i] @ proj @ t[i] + e[i] @ (a * n[i])
        hess[j, j] += t[j] @ proj @ t[j] - e[i] @ (a * n[j])
        hess[i, j] -= t[i] @ proj @ t[j]
        hess[j, i] -= t[j] @ proj @ t[i]
    return grad, hess, rho


def _initial_angles(cfg: ThreeDiskConfig, code) -> np.ndarray:
    c = cfg.centers
    m = len(code)
    theta = np.empty(m)
    for i in range(m):
        target = 0.5 * (c[code[i - 1]] + c[code[(i + 1) % m]]) - c[code[i]]
        theta[i] = math.atan2(target[1], target[0])
    return theta


def mirror_monodromy(cfg: ThreeDiskConfig, code, theta) -> np.ndarray:
    """Product of reflection and free-flight matrices around the orbit.

    Coordinates are (transverse displacement, direction angle) measured just
    after each bounce; a dispersing mirror of radius ``a`` hit at angle
    ``phi`` to the normal acts as ``-[[1, 0], [2/(a cos phi), 1]]``.
    """
    n, _p, rho, e = _geometry(cfg, code, theta)
    mono = np.eye(2)
    for i in range(len(code)):
        cos_phi = float(e[i] @ n[i])
        reflect = -np.array([[1.0, 0.0], [2.0 / (cfg.disk_radius * cos_phi), 1.0]])
        flight = np.array([[1.0, rho[i]], [0.0, 1.0]])
        mono = flight @ reflect @ mono
    return mono


def solve_orbit(cfg: ThreeDiskConfig, code, tol: float = 1e-13) -> BilliardOrbit:
    """Newton iteration on the gradient of the total length."""
    code = tuple(code)
    theta = _initial_angles(cfg, code)
    converged = False
    it = 0
    for it in range(1, MAX_NEWTON_ITER + 1):
        grad, hess, _ = _grad_hess(cfg, code, theta)
        step = np.linalg.solve(hess, grad)
        theta = theta - step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    _n, p, rho, _e = _geometry(cfg, code, theta)
    length = float(math.fsum(rho))
    if converged:
        converged = _admissible(cfg, code, theta)
    return BilliardOrbit(code, theta, p, length, mirror_monodromy(cfg, code, theta), converged, it)


def _admissible(cfg: ThreeDiskConfig, code, theta) -> bool:
    """Reflections happen on the outside and no leg crosses another disk."""
    n, p, rho, e = _geometry(cfg, code, theta)
    m = len(code)
    for i in range(m):
        if e[i] @ n[i] <= 0 or e[i - 1] @ n[i] >= 0:
            return False
    centers = cfg.centers
    for i in range(m):
        for k in (1, 2, 3):
            if k in (code[i], code[(i + 1) % m]):
                continue
            rel = centers[k] - p[i]
            s = np.clip(rel @ e[i], 0.0, rho[i])
            if np.linalg.norm(rel - s * e[i]) <= cfg.disk_radius:
                return False
    return True


def _bounce(cfg: ThreeDiskConfig, disk: int, theta: float, alpha: float, target: int):
    """Leave ``disk`` at angle ``theta`` in direction ``alpha``, reflect off ``target``."""
    c = cfg.centers
    a = cfg.disk_radius
    p = c[disk] + a * np.array([math.cos(theta), math.sin(theta)])
    u = np.array([math.cos(alpha), math.sin(alpha)])
    rel = p - c[target]
    b = rel @ u
    disc = b * b - (rel @ rel - a * a)
    if disc < 0:
        raise ValueError("ray misses the target disk")
    s = -b - math.sqrt(disc)
    q = p + s * u
    nrm = (q - c[target]) / a
    u2 = u - 2.0 * (u @ nrm) * nrm
    return math.atan2(nrm[1], nrm[0]), math.atan2(u2[1], u2[0])


def return_map(cfg: ThreeDiskConfig, code, theta: float, alpha: float):
    """One period of the billiard map in (bounce angle, outgoing direction) on disk ``code[0]``."""
    m = len(code)
    for i in range(m):
        theta, alpha = _bounce(cfg, code[i], theta, alpha, code[(i + 1) % m])
    return theta, alpha


def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def finite_difference_monodromy(cfg: ThreeDiskConfig, orbit: BilliardOrbit, step: float = 1e-6) -> np.ndarray:
    """Richardson-extrapolated central-difference Jacobian of the return map.

    ``step`` is used for a first pass; the step is then shrunk by the square
    root of the Jacobian norm so that strongly unstable orbits stay inside
    the linear regime.  A step whose perturbed ray misses a disk is halved.
    """
    p0, p1 = orbit.points[0], orbit.points[1]
    theta0 = float(orbit.angles[0])
    d = p1 - p0
    alpha0 = math.atan2(d[1], d[0])
    x0 = np.array([theta0, alpha0])

    def jac(h):
        jm = np.empty((2, 2))
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = h
            fp = np.array(return_map(cfg, orbit.code, *(x0 + dx)))
            fm = np.array(return_map(cfg, orbit.code, *(x0 - dx)))
            jm[:, k] = [_wrap(fp[0] - fm[0]) / (2 * h), _wrap(fp[1] - fm[1]) / (2 * h)]
        return jm

    def richardson(h):
        while True:
            try:
                return (4.0 * jac(h / 2) - jac(h)) / 3.0
            except ValueError:
                h /= 2.0
                if h < 1e-12:
                    raise

    first = richardson(step)
    return richardson(step / math.sqrt(max(1.0, float(np.linalg.norm(first)))))


def admissible_codes(max_symbol_length: int, oriented: bool = False):
    """Primitive canonical symbol sequences with ``2 <= n <= max_symbol_length``."""
    out = []
    for n in range(2, max_symbol_length + 1):
        for first in (1, 2, 3):
            for rest in itertools.product((1, 2), repeat=n - 1):
                s = [first]
                for r in rest:
                    s.append((s[-1] - 1 + r) % 3 + 1)
                if s[0] == s[-1]:
                    continue
                s = tuple(s)
                rots = [s[i:] + s[:i] for i in range(n)]
                if s != min(rots):
                    continue
                if any(s == rots[i] for i in range(1, n)):
                    continue  # not primitive
                if not oriented:
                    rev = s[::-1]
                    if s > min(rev[i:] + rev[:i] for i in range(n)):
                        continue
                out.append(s)
    return out


def _orbit_records(cfg: ThreeDiskConfig, solved: BilliardOrbit, horizon: float):
    lam = solved.expanding_multiplier
    log_lam = math.log(abs(lam))
    out = []
    m = 1
    while m * solved.length <= horizon:
        inv = lam ** (-m)
        logdet = m * log_lam + 2.0 * math.log(abs(1.0 - inv))
        out.append(
            PeriodicOrbit(
                code=OrbitCode(Model.THREE_DISK, solved.code * m),
                length=m * solved.length,
                primitive_length=solved.length,
                repetition=m,
                unstable_exponent=m * log_lam,
                log_stability_det=logdet,
            )
        )
        m += 1
    return out


def enumerate_three_disk(
    config: ThreeDiskConfig,
    horizon: float,
    max_symbol_length: int,
    oriented: bool = False,
) -> LengthSpectrum:
    """All periodic orbits with at most ``max_symbol_length`` bounces and length ``<= horizon``.

    ``complete`` holds when every leg-count beyond ``max_symbol_length`` is
    excluded by the bound ``length >= n (R - 2a)`` and every Newton solve
    converged.
    """
    orbits = []
    failed = []
    for code in admissible_codes(max_symbol_length, oriented):
        if len(code) * (config.center_separation - 2 * config.disk_radius) > horizon:
            continue
        solved = solve_orbit(config, code)
        if not solved.converged:
            failed.append(code)
            LOGGER.warning("three-disk orbit %s did not converge; excluded", code)
            continue
        orbits.extend(_orbit_records(config, solved, horizon))
    certified = (max_symbol_length + 1) * (config.center_separation - 2 * config.disk_radius) > horizon
    return LengthSpectrum(
        orbits=tuple(orbits),
        horizon=horizon,
        model_descriptor=config.descriptor(),
        complete=certified and not failed,
        oriented=oriented,
    )

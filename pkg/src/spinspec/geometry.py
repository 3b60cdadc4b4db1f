"""Warped-product surfaces with boundary and their conformal rescalings.

A surface here is a surface of revolution M = [r_min, r_max] x S^1 with
metric dr^2 + f(r)^2 dtheta^2.  If f(r_min) = 0 and f'(r_min) = 1 the inner
end is a smooth pole ("cap") and only r = r_max is a boundary circle;
otherwise both ends are boundary circles.

Sign conventions used throughout the package (they matter):

* scalar curvature          R(r) = -2 f''(r) / f(r)
* the scalar Laplacian is POSITIVE:  Delta w = -(1/f) (f w')'
* mean curvature of a boundary circle is taken with the OUTWARD normal,
  H = s * f'(r_b) / f(r_b),  s = +1 at r_max and s = -1 at r_min,
  so the unit flat disk has H = 1 on its boundary (H = n/r on round
  spheres) and the unit hemisphere has H = 0.

A conformal rescaling g -> e^{2u} g with radial u stays inside the warped
class after the arclength reparametrization s(r) = int e^u dr, with new
profile f~(s) = e^{u(r)} f(r).  `conformal_rescale` builds the target
surface with analytic chain-rule derivatives, so transformation-law
residuals are limited only by roundoff for analytic profiles.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

Array = np.ndarray

_CAP_TOL = 1e-10


class ConfigError(ValueError):
    """Invalid geometry/scenario specification."""


@dataclass(frozen=True)
class RadialFunction:
    """A real function of the radial coordinate with derivatives.

    Wraps value/derivative callables so that analytic profiles keep exact
    derivatives while sampled profiles fall back on spline differentiation.
    """

    value: Callable[[Array], Array]
    deriv: Callable[[Array], Array]
    deriv2: Callable[[Array], Array]
    deriv3: Callable[[Array], Array] | None = None

    def __call__(self, r) -> Array:
        r = np.asarray(r, dtype=float)
        return np.asarray(self.value(r), dtype=float) + np.zeros_like(r)

    def d(self, r) -> Array:
        r = np.asarray(r, dtype=float)
        return np.asarray(self.deriv(r), dtype=float) + np.zeros_like(r)

    def d2(self, r) -> Array:
        r = np.asarray(r, dtype=float)
        return np.asarray(self.deriv2(r), dtype=float) + np.zeros_like(r)

    def d3(self, r) -> Array:
        r = np.asarray(r, dtype=float)
        if self.deriv3 is not None:
            return np.asarray(self.deriv3(r), dtype=float) + np.zeros_like(r)
        eps = 1e-5 * (1.0 + np.max(np.abs(r)))
        return (self.d2(r + eps) - self.d2(r - eps)) / (2 * eps)

    @staticmethod
    def constant(c: float) -> "RadialFunction":
        return RadialFunction(lambda r: c + 0.0 * r,
                              lambda r: 0.0 * r,
                              lambda r: 0.0 * r,
                              lambda r: 0.0 * r)

    @staticmethod
    def from_poly(coeffs: Sequence[float]) -> "RadialFunction":
        """Polynomial in r, coefficients in ascending order."""
        p = Polynomial(list(coeffs))
        p1, p2, p3 = p.deriv(1), p.deriv(2), p.deriv(3)
        return RadialFunction(lambda r: p(r), lambda r: p1(r),
                              lambda r: p2(r), lambda r: p3(r))

    @staticmethod
    def from_samples(r: Array, y: Array) -> "RadialFunction":
        """Cubic-spline interpolant; derivative accuracy O(h^2)."""
        sp = CubicSpline(np.asarray(r, float), np.asarray(y, float))
        d1, d2, d3 = sp.derivative(1), sp.derivative(2), sp.derivative(3)
        return RadialFunction(sp, d1, d2, d3)

    @staticmethod
    def from_callables(value, deriv, deriv2, deriv3=None) -> "RadialFunction":
        return RadialFunction(value, deriv, deriv2, deriv3)


@dataclass(frozen=True)
class WarpedSurface:
    """Surface of revolution with metric dr^2 + f(r)^2 dtheta^2."""

    name: str
    r_min: float
    r_max: float
    profile: RadialFunction
    cap: bool
    spin_structure: str = "antiperiodic"
    profile_exact: bool = True  # False for spline-sampled profiles

    def __post_init__(self):
        if not self.r_max > self.r_min:
            raise ConfigError(f"empty radial interval [{self.r_min}, {self.r_max}]")
        if self.spin_structure not in ("antiperiodic", "periodic"):
            raise ConfigError(f"unknown spin structure {self.spin_structure!r}")
        if self.cap:
            if self.spin_structure != "antiperiodic":
                raise ConfigError("a cap forces the antiperiodic spin structure")
            f0 = float(self.profile(self.r_min))
            fp0 = float(self.profile.d(self.r_min))
            if abs(f0) > _CAP_TOL or abs(fp0 - 1.0) > _CAP_TOL:
                raise ConfigError(
                    f"cap requires f(r_min)=0, f'(r_min)=1; got {f0:.3e}, {fp0:.6f}")
        rs = np.linspace(self.r_min, self.r_max, 65)[1:-1]
        if np.any(self.profile(rs) <= 0):
            raise ConfigError("profile must be positive on the open interval")

    # -- metric data ---------------------------------------------------

    def f(self, r) -> Array:
        return self.profile(r)

    def fp(self, r) -> Array:
        return self.profile.d(r)

    def fpp(self, r) -> Array:
        return self.profile.d2(r)

    @property
    def length(self) -> float:
        return self.r_max - self.r_min

    @property
    def boundaries(self) -> tuple[str, ...]:
        return ("outer",) if self.cap else ("inner", "outer")


@dataclass(frozen=True)
class BoundaryData:
    """One boundary circle with outward-normal mean curvature."""

    boundary_id: str
    r_b: float
    radius: float           # f(r_b), the circumference / 2 pi
    mean_curvature: float   # H = sign * f'(r_b) / f(r_b)
    outward_sign: float     # +1 at r_max, -1 at r_min


def boundary_data(surface: WarpedSurface, boundary_id: str) -> BoundaryData:
    if boundary_id == "outer":
        r_b, sign = surface.r_max, 1.0
    elif boundary_id == "inner":
        if surface.cap:
            raise ConfigError("the cap pole is not a boundary")
        r_b, sign = surface.r_min, -1.0
    else:
        raise ConfigError(f"unknown boundary {boundary_id!r}")
    fb = float(surface.f(r_b))
    h = sign * float(surface.fp(r_b)) / fb
    return BoundaryData(boundary_id, r_b, fb, h, sign)


def scalar_curvature(surface: WarpedSurface, r) -> Array:
    """R(r) = -2 f''(r)/f(r); at a cap pole the limit -2 f'''(r_min)/f'(r_min)."""
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < surface.r_min - 1e-12) or np.any(r > surface.r_max + 1e-12):
        raise ConfigError("radius outside the surface domain")
    out = np.empty_like(r)
    tol = 1e-8 * surface.length
    near_pole = (np.abs(r - surface.r_min) < tol) if surface.cap else np.zeros(r.shape, bool)
    reg = ~near_pole
    out[reg] = -2.0 * surface.fpp(r[reg]) / surface.f(r[reg])
    if np.any(near_pole):
        f3 = float(surface.profile.d3(surface.r_min))
        out[near_pole] = -2.0 * f3 / float(surface.fp(surface.r_min))
    return float(out[0]) if scalar else out


def radial_laplacian(surface: WarpedSurface, w: RadialFunction, r) -> Array:
    """Positive scalar Laplacian of a radial function: -(1/f)(f w')' = -w'' - (f'/f) w'."""
    r = np.asarray(r, dtype=float)
    return -(w.d2(r) + surface.fp(r) / surface.f(r) * w.d(r))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def _parse_scalar(text: str) -> float:
    """Parse a number, allowing 'pi' (e.g. 'pi/3', '5*pi/12')."""
    try:
        return float(text)
    except ValueError:
        pass
    expr = text.replace("pi", repr(math.pi))
    if not set(expr) <= set("0123456789.+-*/e() "):
        raise ConfigError(f"cannot parse scalar {text!r}")
    try:
        return float(eval(expr, {"__builtins__": {}}, {}))
    except Exception as exc:
        raise ConfigError(f"cannot parse scalar {text!r}") from exc


def _sphere_profile() -> RadialFunction:
    # written about r = pi/2 so the hemisphere's equator has exactly f' = 0
    return RadialFunction(lambda r: np.cos(r - np.pi / 2),
                          lambda r: -np.sin(r - np.pi / 2),
                          lambda r: -np.cos(r - np.pi / 2),
                          lambda r: np.sin(r - np.pi / 2))


def catalog() -> dict[str, str]:
    return {
        "hemisphere": "unit hemisphere f=sin r on [0, pi/2]; minimal boundary",
        "cap:<r1>": "spherical cap f=sin r on [0, r1], r1 < pi",
        "disk": "flat unit disk f=r on [0, 1]",
        "annulus:<r0>,<r1>": "flat annulus f=r on [r0, r1]",
        "cylinder:<L>": "flat cylinder f=1 on [0, L]",
        "profile:<path.csv>": "profile sampled from CSV columns r,f (spline derivatives)",
    }


def make_surface(spec: str, spin_structure: str = "antiperiodic") -> WarpedSurface:
    """Build a catalog surface from its textual name."""
    spec = spec.strip()
    if spec == "hemisphere":
        return WarpedSurface("hemisphere", 0.0, np.pi / 2, _sphere_profile(),
                             cap=True, spin_structure="antiperiodic")
    if spec.startswith("cap:"):
        r1 = _parse_scalar(spec[4:])
        if not 0.0 < r1 < np.pi:
            raise ConfigError("cap opening angle must lie in (0, pi)")
        return WarpedSurface(spec, 0.0, r1, _sphere_profile(),
                             cap=True, spin_structure="antiperiodic")
    if spec == "disk":
        prof = RadialFunction.from_poly([0.0, 1.0])
        return WarpedSurface("disk", 0.0, 1.0, prof, cap=True,
                             spin_structure="antiperiodic")
    if spec.startswith("annulus:"):
        parts = spec[len("annulus:"):].split(",")
        if len(parts) != 2:
            raise ConfigError("annulus spec is annulus:<r0>,<r1>")
        r0, r1 = (_parse_scalar(p) for p in parts)
        if not 0 < r0 < r1:
            raise ConfigError("annulus needs 0 < r0 < r1")
        prof = RadialFunction.from_poly([0.0, 1.0])
        return WarpedSurface(spec, r0, r1, prof, cap=False,
                             spin_structure=spin_structure)
    if spec.startswith("cylinder:"):
        L = _parse_scalar(spec[len("cylinder:"):])
        if L <= 0:
            raise ConfigError("cylinder length must be positive")
        prof = RadialFunction.constant(1.0)
        return WarpedSurface(spec, 0.0, L, prof, cap=False,
                             spin_structure=spin_structure)
    if spec.startswith("profile:") or spec.endswith(".csv"):
        path = spec[len("profile:"):] if spec.startswith("profile:") else spec
        if not os.path.exists(path):
            raise ConfigError(f"profile file not found: {path}")
        data = np.loadtxt(path, delimiter=",", skiprows=_csv_header_rows(path))
        r, f = data[:, 0], data[:, 1]
        prof = RadialFunction.from_samples(r, f)
        cap = abs(f[0]) <= _CAP_TOL
        return WarpedSurface(os.path.basename(path), float(r[0]), float(r[-1]),
                             prof, cap=cap, spin_structure="antiperiodic" if cap
                             else spin_structure, profile_exact=False)
    raise ConfigError(f"unknown geometry {spec!r}; see `spinspec catalog`")


def _csv_header_rows(path: str) -> int:
    with open(path) as fh:
        first = fh.readline()
    try:
        float(first.split(",")[0])
        return 0
    except ValueError:
        return 1


def parse_radial_spec(spec: str, r_min: float, r_max: float) -> RadialFunction:
    """Parse a conformal-factor / modifier spec string.

    Supported forms:
      const:<c>                constant c
      bump:<c>                 c*(1 - rhat^2) with rhat = (r - r_min)/(r_max - r_min)
      poly:<c0>,<c1>,...       polynomial in r with the given coefficients
    """
    spec = spec.strip()
    if spec.startswith("const:"):
        return RadialFunction.constant(_parse_scalar(spec[6:]))
    if spec.startswith("bump:"):
        c = _parse_scalar(spec[5:])
        L = r_max - r_min
        # c*(1 - ((r - r_min)/L)^2) expanded as a polynomial in r
        p = Polynomial([c]) - c * (Polynomial([-r_min / L, 1.0 / L])) ** 2
        return RadialFunction.from_poly(p.coef)
    if spec.startswith("poly:"):
        coeffs = [_parse_scalar(c) for c in spec[5:].split(",")]
        return RadialFunction.from_poly(coeffs)
    raise ConfigError(f"cannot parse radial function spec {spec!r}")


# ---------------------------------------------------------------------------
# conformal rescaling
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_integral(fn, a: Array, b: Array) -> Array:
    """8-point Gauss-Legendre of fn over [a, b] (vectorized over panels)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    return half * (fn(x) @ _GL_WEIGHTS)


def _s_of_r_map(u: RadialFunction, edges_r: Array, edges_s: Array):
    eu = lambda x: np.exp(u(x))

    def s_of_r(r) -> Array:
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r1 = np.atleast_1d(r)
        idx = np.clip(np.searchsorted(edges_r, r1, side="right") - 1,
                      0, len(edges_r) - 2)
        s = edges_s[idx] + _panel_integral(eu, edges_r[idx], r1)
        return float(s[0]) if scalar else s

    return s_of_r


def _r_of_s_map(s_of_r, edges_r: Array, edges_s: Array):
    smax = float(edges_s[-1])

    def r_of_s(s) -> Array:
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        flat = np.atleast_1d(s).ravel()
        out = np.empty_like(flat)
        for i, si in enumerate(flat):
            si = min(max(float(si), 0.0), smax)
            j = int(np.clip(np.searchsorted(edges_s, si) - 1, 0,
                            len(edges_s) - 2))
            a, b = edges_r[j], edges_r[j + 1]
            if abs(float(edges_s[j]) - si) < 1e-14 * (1 + smax):
                out[i] = a
                continue
            out[i] = brentq(lambda r: s_of_r(r) - si, a, b,
                            xtol=1e-14, rtol=8.9e-16)
        return float(out[0]) if scalar else out.reshape(np.shape(s))

    return r_of_s


@dataclass(frozen=True)
class ConformalRescaling:
    """g -> e^{2u} g realized as a reparametrized warped surface."""

    source: WarpedSurface
    u: RadialFunction
    target: WarpedSurface
    _s_of_r: object
    _r_of_s: object

    def s_of_r(self, r) -> Array:
        return self._s_of_r(r)

    def r_of_s(self, s) -> Array:
        return self._r_of_s(s)

    def pullback(self, g: RadialFunction) -> RadialFunction:
        """Transport a radial function to the target arclength coordinate.

        Derivatives use d/ds = e^{-u} d/dr.
        """
        u, r_of_s = self.u, self._r_of_s

        def val(s):
            return g(r_of_s(s))

        def d1(s):
            r = r_of_s(s)
            return g.d(r) * np.exp(-u(r))

        def d2(s):
            r = r_of_s(s)
            return np.exp(-2 * u(r)) * (g.d2(r) - u.d(r) * g.d(r))

        return RadialFunction(val, d1, d2)


def conformal_rescale(surface: WarpedSurface, u: RadialFunction,
                      n_panels: int = 512) -> ConformalRescaling:
    """Build the conformally rescaled surface e^{2u} g in warped form."""
    edges_r = np.linspace(surface.r_min, surface.r_max, n_panels + 1)
    eu = lambda x: np.exp(u(x))
    panel = _panel_integral(eu, edges_r[:-1], edges_r[1:])
    edges_s = np.concatenate([[0.0], np.cumsum(panel)])
    s_of_r = _s_of_r_map(u, edges_r, edges_s)
    r_of_s = _r_of_s_map(s_of_r, edges_r, edges_s)

    # target profile in the arclength coordinate s, via chain rule
    def val(s):
        r = r_of_s(s)
        return np.exp(u(r)) * surface.f(r)

    def d1(s):
        r = r_of_s(s)
        return u.d(r) * surface.f(r) + surface.fp(r)

    def d2(s):
        r = r_of_s(s)
        g = (u.d2(r) * surface.f(r) + u.d(r) * surface.fp(r) + surface.fpp(r))
        return np.exp(-u(r)) * g

    def d3(s):
        r = r_of_s(s)
        up, upp, uppp = u.d(r), u.d2(r), u.d3(r)
        f, fp, fpp, fppp = (surface.f(r), surface.fp(r), surface.fpp(r),
                            surface.profile.d3(r))
        g = upp * f + up * fp + fpp
        gp = uppp * f + 2 * upp * fp + up * fpp + fppp
        return np.exp(-2 * u(r)) * (gp - up * g)

    prof = RadialFunction(val, d1, d2, d3)
    target = WarpedSurface(surface.name + "|conformal", 0.0, float(edges_s[-1]),
                           prof, cap=surface.cap,
                           spin_structure=surface.spin_structure,
                           profile_exact=surface.profile_exact)
    return ConformalRescaling(surface, u, target, s_of_r, r_of_s)


def conformal_law_residuals(resc: ConformalRescaling, r: Array) -> dict:
    """Residuals of the n=2 conformal transformation laws, both sides computed
    by independent code paths (target-surface geometry vs source-side formula).

    At n = 2 the laws read R-bar e^{2u} = R + 2 Delta u, Delta-bar u =
    e^{-2u} Delta u (the |du|^2 term carries the dimensional factor n - 2 and
    drops out), and H-bar = e^{-u} (H + du(e0)).
    """
    src, u = resc.source, resc.u
    r = np.asarray(r, dtype=float)
    s = resc.s_of_r(r)
    eu = np.exp(u(r))

    lap_u = radial_laplacian(src, u, r)
    r_bar = scalar_curvature(resc.target, s)
    res_curv = r_bar * eu ** 2 - (scalar_curvature(src, r) + 2.0 * lap_u)

    u_t = resc.pullback(u)
    lap_bar_u = radial_laplacian(resc.target, u_t, s)
    res_lap = lap_bar_u - np.exp(-2 * u(r)) * lap_u

    res_h = {}
    for which in src.boundaries:
        bd = boundary_data(src, which)
        bd_t = boundary_data(resc.target, which)
        du_e0 = bd.outward_sign * float(u.d(bd.r_b))
        res_h[which] = bd_t.mean_curvature - float(np.exp(-u(bd.r_b))) * (
            bd.mean_curvature + du_e0)

    return {"curvature": res_curv, "laplacian": res_lap, "mean_curvature": res_h}

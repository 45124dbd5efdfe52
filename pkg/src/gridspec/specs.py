"""Decentralized interoperability certificate and frequency-domain performance checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .devices import GflParams, build_device
from .errors import GridMismatch, InvalidParams, NotHurwitz, PoleAtZero, UndampedLine
from .freq_core import (
    FrequencyResponse,
    RationalTransferFunction,
    closed_loop_response,
    evaluate,
    is_hurwitz,
    polymul,
)
from .network import NetworkAbstraction

STRICT_TOL = 1e-6
HALF_PI = 0.5 * math.pi

DEFAULT_GRID_HZ = (
    0.1, 0.15, 0.2, 0.3, 0.5, 0.8, 1, 1.5, 2, 3, 4, 5, 6, 7, 8, 9, 10,
    12, 15, 20, 25, 30, 40, 50, 60, 70, 80, 100,
)


@dataclass(frozen=True)
class OmegaGrid:
    """Perturbation frequencies in Hz, plus optional analytic end limits."""

    frequencies: tuple
    include_zero_limit: bool = True
    include_infinity_limit: bool = True

    def __post_init__(self):
        f = tuple(float(x) for x in self.frequencies)
        if not f:
            raise InvalidParams("OmegaGrid needs at least one frequency")
        if any(not (x > 0 and math.isfinite(x)) for x in f):
            raise InvalidParams("OmegaGrid frequencies must be finite and > 0")
        if any(b <= a for a, b in zip(f, f[1:])):
            raise InvalidParams("OmegaGrid frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", f)

    @classmethod
    def default(cls, **kw) -> "OmegaGrid":
        """The 28-point measurement grid, 0.1 to 100 Hz."""
        return cls(DEFAULT_GRID_HZ, **kw)

    @classmethod
    def dense(cls, w_min=1e-3, w_max=1e4, per_decade=400, **kw) -> "OmegaGrid":
        """Log grid in rad/s (converted to Hz), ``per_decade`` points per decade."""
        n = int(round(per_decade * math.log10(w_max / w_min))) + 1
        return cls(tuple(np.logspace(math.log10(w_min), math.log10(w_max), n) / (2 * math.pi)), **kw)

    @property
    def hz(self) -> np.ndarray:
        return np.asarray(self.frequencies)

    @property
    def omega(self) -> np.ndarray:
        return 2 * math.pi * self.hz

    def __len__(self):
        return len(self.frequencies)


@dataclass(frozen=True)
class LimitPoint:
    """End point of the locus ``w = 1 + z`` as omega -> 0 or omega -> infinity."""

    omega_p: float  # 0.0 or inf
    w: Optional[complex]  # None when |w| -> infinity
    direction: float  # principal argument of w (or of its asymptote)

    @property
    def infinite(self) -> bool:
        return self.w is None

    def as_complex(self) -> complex:
        if self.w is not None:
            return self.w
        c, s = math.cos(self.direction), math.sin(self.direction)
        re = 0.0 if abs(c) < 1e-12 else math.copysign(math.inf, c)
        im = 0.0 if abs(s) < 1e-12 else math.copysign(math.inf, s)
        return complex(re, im)


@dataclass(frozen=True)
class StabilityVerdict:
    passed: bool
    alpha_interval: Optional[tuple]  # closed [lo, hi] inside [0, pi/2), None when empty
    worst_sample: tuple  # (omega_p rad/s, w)
    margin: float  # best normalized half-plane inner product minus the strictness floor
    mode: str = "static"
    ratio: float = float("nan")
    open_bounds: tuple = (0.0, 0.0)  # (max(0, -pi/2 - B), min(pi/2, pi/2 - A)), no tolerance
    omega: np.ndarray = field(default=None, repr=False)  # rad/s
    locus: np.ndarray = field(default=None, repr=False)  # w = 1 + z on the grid
    limits: tuple = ()

    def nyquist_rows(self):
        """``(omega_p_hz, w)`` rows: zero limit, grid, infinity limit."""
        rows = []
        lims = {lp.omega_p: lp for lp in self.limits}
        if 0.0 in lims:
            rows.append((0.0, lims[0.0].as_complex()))
        for w, val in zip(self.omega, self.locus):
            rows.append((float(w) / (2 * math.pi), complex(val)))
        if math.inf in lims:
            rows.append((math.inf, lims[math.inf].as_complex()))
        return rows


@dataclass(frozen=True)
class PerfReport:
    passed: bool
    violations: tuple  # (omega_p rad/s, measured magnitude, bound value)
    spec_id: str
    provenance: str = "analytic"


def _lowest(coeffs):
    for i, a in enumerate(coeffs):
        if a != 0.0:
            return i, a
    return None, 0.0


def _rational_limit(num, den, at_zero: bool):
    """Leading behaviour ``c * (j omega)^k`` of ``num/den`` at omega -> 0 or infinity."""
    if at_zero:
        p, a = _lowest(num)
        q, b = _lowest(den)
        k = p - q
    else:
        p, a = len(num) - 1, num[-1]
        q, b = len(den) - 1, den[-1]
        k = p - q
    return a / b, k


def _limit_point(c: float, k: int, at_zero: bool, omega_p: float) -> LimitPoint:
    vanishing = (k > 0) if at_zero else (k < 0)
    if c == 0.0 or vanishing:
        return LimitPoint(omega_p, 1.0 + 0j, 0.0)
    if k == 0:
        w = 1.0 + c
        return LimitPoint(omega_p, complex(w), math.atan2(0.0, w))
    z_dir = complex(c) * (1j ** k)
    return LimitPoint(omega_p, None, math.atan2(z_dir.imag, z_dir.real))


def _sampled_values(g: FrequencyResponse, grid: OmegaGrid) -> np.ndarray:
    want = grid.omega
    idx = np.searchsorted(g.omega, want)
    out = np.empty(want.size, dtype=complex)
    for n, (w, i) in enumerate(zip(want, idx)):
        hit = None
        for j in (i - 1, i):
            if 0 <= j < g.omega.size and abs(g.omega[j] - w) <= 1e-9 * w:
                hit = j
        if hit is None:
            raise GridMismatch(f"sampled response has no point at {w / (2 * math.pi):.6g} Hz")
        out[n] = g.values[hit]
    return out


def nyquist_locus(g, net: NetworkAbstraction, grid: OmegaGrid, mode: str = "static"):
    """Return ``(omega, w, limits)`` for ``w = 1 + (gamma/psi) mu(j w)/(j w) g(j w)``.

    Validates the preconditions of the certificate; see :func:`interop_check`.
    """
    if mode not in ("static", "dynamic"):
        raise InvalidParams(f"mode must be 'static' or 'dynamic', got {mode!r}")
    if mode == "dynamic" and net.rho == 0.0:
        raise UndampedLine("dynamic line model needs rho > 0 (undamped resonance at omega0)")
    omega = grid.omega
    mu = net.mu()
    mu0 = 1.0 / mu.den[0]
    mu_vals = evaluate(mu, omega) if mode == "dynamic" else mu0
    limits = []
    if isinstance(g, RationalTransferFunction):
        if g.den[0] == 0.0:
            raise PoleAtZero("bus transfer function has a pole at zero; certificate not applicable")
        if not is_hurwitz(g):
            raise NotHurwitz("bus transfer function has poles outside the open left half-plane")
        g_vals = evaluate(g, omega)
        mu_num, mu_den = (mu.num, mu.den) if mode == "dynamic" else ((mu0,), (1.0,))
        num = tuple(net.ratio * a for a in polymul(mu_num, g.num))
        den = polymul(polymul(mu_den, g.den), (0.0, 1.0))
        if grid.include_zero_limit:
            limits.append(_limit_point(*_rational_limit(num, den, True), True, 0.0))
        if grid.include_infinity_limit:
            limits.append(_limit_point(*_rational_limit(num, den, False), False, math.inf))
    elif isinstance(g, FrequencyResponse):
        g_vals = _sampled_values(g, grid)
        if grid.include_zero_limit:
            # g held flat below the lowest sample: z ~ ratio mu(0) g(w_min) / (j w)
            c = net.ratio * mu0 * g_vals[0]
            if c == 0:
                limits.append(LimitPoint(0.0, 1.0 + 0j, 0.0))
            else:
                d = c / 1j
                limits.append(LimitPoint(0.0, None, math.atan2(d.imag, d.real)))
        if grid.include_infinity_limit:
            # g held flat above the highest sample: z -> 0
            limits.append(LimitPoint(math.inf, 1.0 + 0j, 0.0))
    else:
        raise InvalidParams("g must be a RationalTransferFunction or FrequencyResponse")
    z = net.ratio * mu_vals * g_vals / (1j * omega)
    return omega, 1.0 + z, tuple(limits)


def _point_margins(w_abs, phi, infinite, alpha):
    """Normalized inner products ``Re(e^{j a} w)/(1+|w|)`` for every point and alpha."""
    alpha = np.atleast_1d(alpha)[:, None]
    finite_abs = np.where(infinite, 1.0, w_abs)
    scale = np.where(infinite, 1.0, finite_abs / (1.0 + finite_abs))
    return scale[None, :] * np.cos(phi[None, :] + alpha)


def interop_check(
    g: Union[RationalTransferFunction, FrequencyResponse],
    net: NetworkAbstraction,
    grid: OmegaGrid,
    mode: str = "static",
    tol: float = STRICT_TOL,
) -> StabilityVerdict:
    """Check the rotated half-plane condition on ``w = 1 + z`` over the grid and its limits.

    The verdict passes when some ``alpha`` in ``[0, pi/2)`` keeps
    ``Re(e^{j alpha} w) / (1 + |w|) > tol`` at every grid point and at both
    end limits (asymptotic directions are used for infinite limits).

    Raises
    ------
    PoleAtZero, NotHurwitz
        Analytic ``g`` that integrates or is unstable.
    GridMismatch
        Sampled ``g`` missing a requested frequency.
    UndampedLine
        ``mode="dynamic"`` with ``net.rho == 0``.
    """
    omega, w, limits = nyquist_locus(g, net, grid, mode)
    if np.any(w == 0):
        k = int(np.argmax(w == 0))
        return StabilityVerdict(False, None, (float(omega[k]), 0j), -tol, mode, net.ratio,
                                (0.0, 0.0), omega, w, limits)
    phi = np.unwrap(np.angle(w))
    # limits attach to the nearest grid end on the same branch
    lim_phi = []
    for lp in limits:
        anchor = phi[0] if lp.omega_p == 0.0 else phi[-1]
        d = lp.direction
        d += 2 * math.pi * round((anchor - d) / (2 * math.pi))
        lim_phi.append(d)
    all_phi = np.concatenate([phi, lim_phi])
    all_abs = np.concatenate([np.abs(w), [abs(lp.w) if lp.w is not None else math.inf for lp in limits]])
    infinite = np.concatenate([np.zeros(w.size, bool), [lp.infinite for lp in limits]])
    all_omega = np.concatenate([omega, [lp.omega_p for lp in limits]])
    all_w = np.concatenate([w, [lp.as_complex() for lp in limits]])

    A, B = float(all_phi.max()), float(all_phi.min())
    open_bounds = (max(0.0, -HALF_PI - B), min(HALF_PI, HALF_PI - A))

    finite_abs = np.where(infinite, 1.0, all_abs)
    with np.errstate(divide="ignore"):
        need = np.where(infinite, tol, tol * (1.0 + finite_abs) / finite_abs)
    feasible = bool(np.all(need <= 1.0))
    lo, hi = 0.0, HALF_PI - tol
    if feasible:
        c = np.arccos(need)
        lo = max(lo, float(np.max(-all_phi - c)))
        hi = min(hi, float(np.min(-all_phi + c)))
    passed = feasible and lo < hi

    if passed:
        alphas = np.linspace(lo, hi, 2001)
    else:
        alphas = np.linspace(0.0, HALF_PI, 2001, endpoint=False)
    m = _point_margins(all_abs, all_phi, infinite, alphas)
    worst = m.min(axis=1)
    best = int(np.argmax(worst))
    k = int(np.argmin(m[best]))
    margin = float(worst[best]) - tol
    if passed and margin <= 0.0:  # interval narrower than the alpha sampling
        margin = float(np.finfo(float).tiny)
    if not passed:
        margin = min(margin, 0.0)
    return StabilityVerdict(
        passed=passed,
        alpha_interval=(lo, hi) if passed else None,
        worst_sample=(float(all_omega[k]), complex(all_w[k])),
        margin=margin,
        mode=mode,
        ratio=net.ratio,
        open_bounds=open_bounds,
        omega=omega,
        locus=w,
        limits=limits,
    )


def _as_frf(frf, grid: Optional[OmegaGrid] = None) -> FrequencyResponse:
    if isinstance(frf, FrequencyResponse):
        return frf
    if isinstance(frf, RationalTransferFunction):
        if grid is None:
            raise InvalidParams("an analytic response needs a grid")
        return frf.response(grid.omega)
    raise InvalidParams("expected FrequencyResponse or RationalTransferFunction")


def smoothing_bound(omega, tau_f: float):
    return np.abs(1.0 / (1.0 + 1j * tau_f * np.asarray(omega, dtype=float)))


def check_smoothing(frf, tau_f: float, tol_mag: float = 0.0, grid=None,
                    provenance: str = "analytic") -> PerfReport:
    """Flag samples where ``|g(j w)| > |1/(tau_f j w + 1)| + tol_mag``.

    The comparison is non-strict: a curve lying exactly on the bound passes.
    """
    if not tau_f > 0:
        raise InvalidParams("tau_f must be > 0")
    if tol_mag < 0:
        raise InvalidParams("tol_mag must be >= 0")
    frf = _as_frf(frf, grid)
    mag = np.abs(frf.values)
    bound = smoothing_bound(frf.omega, tau_f)
    bad = mag > bound * (1 + 4 * np.finfo(float).eps) + tol_mag
    viol = tuple((float(w), float(m), float(b)) for w, m, b in zip(frf.omega[bad], mag[bad], bound[bad]))
    return PerfReport(not viol, viol, "smoothing", provenance)


def check_droop_band(frf, m_p: float, eps: float, omega_bar: float, grid=None,
                     provenance: str = "analytic") -> PerfReport:
    """Flag samples at or below ``omega_bar`` (Hz) whose magnitude leaves ``[1/m_p - eps, 1/m_p + eps]``."""
    if not (m_p > 0 and eps > 0 and omega_bar > 0):
        raise InvalidParams("m_p, eps and omega_bar must be > 0")
    frf = _as_frf(frf, grid)
    mag = np.abs(frf.values)
    centre = 1.0 / m_p
    in_range = frf.omega <= 2 * math.pi * omega_bar * (1 + 1e-12)
    bad = in_range & ((mag < centre - eps) | (mag > centre + eps))
    viol = tuple((float(w), float(m), centre) for w, m in zip(frf.omega[bad], mag[bad]))
    return PerfReport(not viol, viol, "droop_band", provenance)


def fit_tau_f(frf, grid=None) -> float:
    """Largest ``tau_f`` whose smoothing bound still covers the curve at every sample.

    Per sample the bound holds iff ``tau_f <= sqrt(|g|^-2 - 1) / omega``, so
    the tight value is the minimum over samples and the bound touches the
    curve there.  Raises ``InvalidParams`` if the curve exceeds unity gain.
    """
    frf = _as_frf(frf, grid)
    mag = np.abs(frf.values)
    if np.any(mag > 1.0):
        k = int(np.argmax(mag))
        raise InvalidParams(
            f"|g| = {mag[k]:.6g} > 1 at {frf.hz[k]:.6g} Hz; no smoothing bound covers it"
        )
    with np.errstate(divide="ignore"):
        tau = np.sqrt(1.0 / mag ** 2 - 1.0) / frf.omega
    return float(np.min(tau))


@dataclass(frozen=True)
class Prop1Report:
    relative_degree: int
    limit_magnitude: float  # |g_omega_omegag(j inf)|
    witnesses: dict  # tau_f -> omega (rad/s) where the smoothing bound fails, or None
    closed_loop: RationalTransferFunction

    @property
    def violates(self) -> bool:
        return bool(self.witnesses) and all(w is not None for w in self.witnesses.values())


def smoothing_witness(g_cl: RationalTransferFunction, tau_f: float,
                      w_min: float = 1e-3, w_max: float = 1e12, per_decade: int = 50):
    """Smallest log-grid frequency (rad/s) where ``g_cl`` exceeds the smoothing bound."""
    n = int(per_decade * math.log10(w_max / w_min)) + 1
    omega = np.logspace(math.log10(w_min), math.log10(w_max), n)
    mag = np.abs(evaluate(g_cl, omega))
    bad = np.nonzero(mag > smoothing_bound(omega, tau_f))[0]
    return float(omega[bad[0]]) if bad.size else None


def prop1_check(params, k_static: float, tau_f_values: Sequence[float] = (1e-4, 1e-2, 1.0, 100.0)) -> Prop1Report:
    """Show that a PLL-based bus model cannot meet the smoothing bound.

    ``params`` is ``GflParams`` or any bus transfer function (negative
    controls).  When the closed loop has relative degree zero its magnitude
    tends to a nonzero constant, so each ``tau_f`` gets a witness frequency.
    """
    g = build_device("gfl", params) if isinstance(params, GflParams) else params
    if not isinstance(g, RationalTransferFunction):
        raise InvalidParams("prop1_check needs GflParams or a RationalTransferFunction")
    g_w, _ = closed_loop_response(g, k_static)
    rd = g_w.relative_degree
    limit = abs(g_w.num[-1] / g_w.den[-1]) if rd == 0 else 0.0
    witnesses = {}
    if rd == 0 and limit > 0:
        witnesses = {float(t): smoothing_witness(g_w, t) for t in tau_f_values}
    return Prop1Report(rd, limit, witnesses, g_w)

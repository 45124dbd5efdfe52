"""Two-bus probing testbench: stiff controllable source, RL line, device under test.

The plant is written in a frame rotating at ``omega0``.  The line current is
a complex state; grid-forming devices are controlled voltage phasors (behind
an optional filter inductance, or regulated through a first-order inner-loop
lag), the grid-following device is a PLL-synchronized current source whose
current loop is a first-order lag.

Recorded powers use the generator convention: ``p`` and ``q`` are injected by
the device into the line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import root

from . import _backend
from ._kernel_py import (
    KIND_DROOP,
    KIND_GFL,
    KIND_PI,
    MODE_LAG,
    MODE_NONE,
    N_MEAS,
    N_PARAMS,
    N_STATES,
    P_AV,
    P_AW,
    P_D,
    P_ELL,
    P_ELLF,
    P_KI,
    P_KIND,
    P_KP,
    P_KQV,
    P_MODE,
    P_MP,
    P_PSET,
    P_R,
    P_TA,
    P_TAU,
    P_TAUD,
    P_VSTAR,
    P_W0,
    P_WP,
    P_XII,
    P_XIP,
    state_derivative,
)
from .devices import DeviceParams, DroopParams, GflParams, GfmPiParams, InnerLoopConfig, fastest_time_constant
from .errors import InvalidParams, NoSteadyState, NumericalDivergence
from .network import LineParams

_KIND_CODES = {DroopParams: KIND_DROOP, GfmPiParams: KIND_PI, GflParams: KIND_GFL}
_KIND_NAMES = {DroopParams: "droop", GfmPiParams: "gfm_pi", GflParams: "gfl"}


@dataclass(frozen=True)
class DeviceUnderTest:
    """Device model for the testbench.

    ``k_qv`` is the reactive-power/voltage droop of the grid-following device
    (p.u. q per p.u. V); grid-forming devices hold their voltage reference.
    """

    params: DeviceParams
    inner: InnerLoopConfig = field(default_factory=InnerLoopConfig)
    k_qv: float = 0.0

    def __post_init__(self):
        if type(self.params) not in _KIND_CODES:
            raise InvalidParams(f"unsupported device parameters {type(self.params).__name__}")
        if self.kind == "gfl":
            if self.inner.mode != "lag":
                raise InvalidParams("GFL device needs inner.mode='lag' (current-loop lag T_a)")
            if self.inner.ell_f != 0.0:
                raise InvalidParams("GFL device is a current source; ell_f must be 0")
        elif self.k_qv != 0.0:
            raise InvalidParams("k_qv applies to the grid-following device only")
        if not (math.isfinite(self.k_qv) and self.k_qv >= 0):
            raise InvalidParams("k_qv must be >= 0")

    @property
    def kind(self) -> str:
        return _KIND_NAMES[type(self.params)]


@dataclass(frozen=True)
class TestbenchConfig:
    """Line, device and dispatch.  ``scr``, when given, resets the line inductance
    to ``v^2 / (scr * omega0)`` keeping the line's R/L ratio."""

    __test__ = False  # not a pytest class

    line: LineParams
    dut: DeviceUnderTest
    dispatch: float
    scr: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.dispatch):
            raise InvalidParams("dispatch must be finite")
        if abs(self.line.v_n - self.line.v_k) > 1e-12:
            raise InvalidParams("testbench holds both bus magnitudes at V*; line.v_n must equal line.v_k")
        if self.scr is not None:
            line = LineParams.from_scr(self.scr, self.line.rho, self.line.v_n, self.line.omega0)
            object.__setattr__(self, "line", replace(line, v_k=self.line.v_k))

    @property
    def v_star(self) -> float:
        return self.line.v_k

    @property
    def omega0(self) -> float:
        return self.line.omega0


@dataclass(frozen=True)
class ProbeConfig:
    """One probing experiment.

    ``omega_p`` is in Hz.  A negative amplitude is a probe shifted by pi.
    Both amplitudes zero is a quiescent run.  ``min_settle_time`` (s) lengthens the discarded
    transient to a whole number of periods covering at least that time, so
    fast probes still wait out the slow closed-loop modes.
    """

    omega_p: float
    A_V: float
    A_omega: float
    V_star: float
    omega0: float
    dt: float
    settle_periods: int
    measure_periods: int
    min_settle_time: float = 0.0

    def __post_init__(self):
        if not (self.omega_p > 0 and math.isfinite(self.omega_p)):
            raise InvalidParams("ProbeConfig.omega_p must be > 0")
        if self.A_V != 0.0 and self.A_omega != 0.0:
            raise InvalidParams("perturb either the voltage magnitude or the frequency, not both")
        if not (math.isfinite(self.A_V) and math.isfinite(self.A_omega)):
            raise InvalidParams("probe amplitudes must be finite")
        if not (self.V_star > 0 and self.omega0 > 0 and self.dt > 0):
            raise InvalidParams("V_star, omega0 and dt must be > 0")
        if int(self.measure_periods) != self.measure_periods or self.measure_periods < 1:
            raise InvalidParams("measure_periods must be an integer >= 1")
        if int(self.settle_periods) != self.settle_periods or self.settle_periods < 0:
            raise InvalidParams("settle_periods must be an integer >= 0")
        if self.min_settle_time < 0:
            raise InvalidParams("min_settle_time must be >= 0")

    @property
    def experiment(self) -> str:
        return "V" if self.A_V != 0.0 else "w"

    def steps_per_period(self) -> int:
        period = 1.0 / self.omega_p
        return int(math.ceil(period / self.dt - 1e-9))

    def effective_dt(self) -> float:
        """``dt`` shrunk so that one perturbation period is a whole number of steps."""
        return (1.0 / self.omega_p) / self.steps_per_period()

    def settle_steps(self) -> int:
        periods = self.settle_periods
        if self.min_settle_time > 0:
            periods = max(periods, int(math.ceil(self.min_settle_time * self.omega_p - 1e-9)))
        return periods * self.steps_per_period()

    def check_dt(self, f_fast: float) -> None:
        limit = 1.0 / (50.0 * max(self.omega_p, f_fast))
        if self.dt > limit * (1 + 1e-12):
            raise InvalidParams(
                f"dt={self.dt:g} s exceeds 1/(50*max(f_p, f_fast))={limit:.3g} s at {self.omega_p:g} Hz"
            )


@dataclass(frozen=True)
class OperatingPoint:
    angle: float  # bus voltage angle relative to the grid source, rad
    current: complex  # line current phasor, p.u.
    p: float
    q: float
    v_bus: complex
    state: tuple  # initial integrator state
    p_set: float  # setpoint passed to the device model
    residual: float


@dataclass
class TimeSeriesRecord:
    """Uniformly sampled bus measurements from one probe run."""

    t: np.ndarray
    V: np.ndarray
    theta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    omega_ref: np.ndarray
    dt: float
    omega_p: float  # Hz
    experiment: str = "w"

    COLUMNS = ("t", "V", "theta", "p", "q", "omega_ref")

    def __len__(self):
        return self.t.size

    def filename(self) -> str:
        return f"run_{self.omega_p!r}_{self.experiment}.csv"

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])


def _f_fast(cfg: TestbenchConfig) -> float:
    t_min = fastest_time_constant(cfg.dut.params, cfg.dut.inner)
    return max(1.0 / (2 * math.pi * t_min), cfg.omega0 / (2 * math.pi))


def _param_vector(cfg: TestbenchConfig, p_set: float, probe: Optional[ProbeConfig]) -> np.ndarray:
    P = np.zeros(N_PARAMS)
    line, dut = cfg.line, cfg.dut
    P[P_KIND] = _KIND_CODES[type(dut.params)]
    P[P_MODE] = MODE_LAG if dut.inner.mode == "lag" else MODE_NONE
    P[P_W0] = line.omega0
    P[P_ELL] = line.ell
    P[P_R] = line.r
    P[P_ELLF] = dut.inner.ell_f
    P[P_VSTAR] = cfg.v_star
    P[P_PSET] = p_set
    par = dut.params
    if isinstance(par, DroopParams):
        P[P_MP], P[P_TAU] = par.m_p, par.tau
    elif isinstance(par, GfmPiParams):
        P[P_XIP], P[P_XII], P[P_TAU] = par.xi_p, par.xi_i, par.tau
    else:
        P[P_KP], P[P_KI], P[P_TAUD], P[P_D] = par.k_p, par.k_i, par.tau_d, par.D
        P[P_KQV] = dut.k_qv
    if dut.inner.T_a is not None:
        P[P_TA] = dut.inner.T_a
    if probe is not None:
        P[P_AV] = probe.A_V
        P[P_AW] = probe.A_omega
        P[P_WP] = 2 * math.pi * probe.omega_p
    else:
        P[P_WP] = 1.0
    return P


def _voltage_source_angle(e: float, v_g: float, z: complex, p: float) -> float:
    """Angle of a source ``e`` behind ``z`` delivering ``p`` into ``v_g``."""
    phi = math.atan2(z.imag, z.real)
    c = (e * e * math.cos(phi) - p * abs(z)) / (e * v_g)
    if not -1.0 <= c <= 1.0:
        raise NoSteadyState(f"dispatch p={p:g} exceeds the line transfer capability")
    delta = math.acos(c) - phi
    if abs(delta) >= 0.5 * math.pi:
        raise NoSteadyState(f"operating angle {delta:.4g} rad is outside (-pi/2, pi/2)")
    return delta


def _gfl_operating_point(cfg: TestbenchConfig):
    """Bus voltage and current of the PLL-aligned current source at its dispatch.

    Unknowns are the bus magnitude and angle; the current is ``(p*/V + j k_qv (V - V*)/V)``
    in the bus-voltage frame.  The high-voltage (stable) branch is selected by
    continuation from zero dispatch.
    """
    line, dut = cfg.line, cfg.dut
    z = complex(line.r, line.omega0 * line.ell)
    v_g, v_star, p_star, kq = line.v_k, cfg.v_star, cfg.dispatch, dut.k_qv

    def current(v, th):
        return complex(p_star / v, kq * (v - v_star) / v) * complex(math.cos(th), math.sin(th))

    def resid(u, p):
        v, th = u
        i = complex(p / v, kq * (v - v_star) / v) * complex(math.cos(th), math.sin(th))
        r = v * complex(math.cos(th), math.sin(th)) - v_g - z * i
        return [r.real, r.imag]

    # continuation in the dispatch keeps the solution on the high-voltage branch
    u = np.array([v_g, 0.0])
    for p in np.linspace(0.0, p_star, 21)[1:] if p_star != 0 else [0.0]:
        sol = root(resid, u, args=(p,), method="hybr", tol=1e-14)
        if math.hypot(*resid(sol.x, p)) > 1e-12 or sol.x[0] <= 0:
            raise NoSteadyState(f"dispatch p={p_star:g} exceeds the line transfer capability")
        u = sol.x
    v, th = u
    if abs(th) >= 0.5 * math.pi:
        raise NoSteadyState(f"operating angle {th:.4g} rad is outside (-pi/2, pi/2)")
    return current(v, th), v * complex(math.cos(th), math.sin(th))


def solve_steady_state(cfg: TestbenchConfig) -> OperatingPoint:
    """Equilibrium with the source at ``V*`` and ``omega0`` and the device at its dispatch."""
    line, dut = cfg.line, cfg.dut
    w0, v_g, e = line.omega0, line.v_k, line.v_n
    p_star = cfg.dispatch
    z_line = complex(line.r, w0 * line.ell)
    x = [0.0] * N_STATES
    if dut.kind == "gfl":
        current, v_bus = _gfl_operating_point(cfg)
        delta = math.atan2(v_bus.imag, v_bus.real)
        p_set = p_star
        x[0], x[1], x[2], x[5] = current.real, current.imag, delta, abs(v_bus)
    else:
        ell_f = dut.inner.ell_f
        if dut.inner.mode == "none":
            z_tot = complex(line.r, w0 * (line.ell + ell_f))
            delta_e = _voltage_source_angle(e, v_g, z_tot, p_star)
            emf = e * complex(math.cos(delta_e), math.sin(delta_e))
            current = (emf - v_g) / z_tot
            v_bus = emf - 1j * w0 * ell_f * current
            theta_ref = delta_e
            v_c = emf
        else:
            delta_b = _voltage_source_angle(e, v_g, z_line, p_star)
            v_bus = e * complex(math.cos(delta_b), math.sin(delta_b))
            current = (v_bus - v_g) / z_line
            v_c = v_bus + 1j * w0 * ell_f * current
            theta_ref = delta_b
        delta = math.atan2(v_bus.imag, v_bus.real)
        p_set = p_star
        x[0], x[1], x[2], x[3] = current.real, current.imag, theta_ref, p_star
        x[5], x[6] = v_c.real, v_c.imag
    s = v_bus * current.conjugate()
    dx, _ = state_derivative(_param_vector(cfg, p_set, None), 0.0, x)
    residual = max(line.ell * math.hypot(dx[0], dx[1]), max(abs(v) for v in dx[2:]))
    if residual > 1e-10:
        raise NoSteadyState(f"steady-state residual {residual:.3g} too large")
    return OperatingPoint(delta, current, s.real, s.imag, v_bus, tuple(x), p_set, residual)


def simulate_probe_run(cfg: TestbenchConfig, probe: ProbeConfig, backend: Optional[str] = None,
                       op: Optional[OperatingPoint] = None) -> TimeSeriesRecord:
    """Integrate from the operating point under the probe and return the measurement window.

    The window starts after the settle interval and spans exactly
    ``measure_periods`` perturbation periods.
    """
    if abs(probe.V_star - cfg.v_star) > 1e-12 or abs(probe.omega0 - cfg.omega0) > 1e-9:
        raise InvalidParams("probe V_star/omega0 must match the testbench nominal values")
    probe.check_dt(_f_fast(cfg))
    if op is None:
        op = solve_steady_state(cfg)
    kernel = _backend.get_kernel(backend)
    params = _param_vector(cfg, op.p_set, probe)
    x = np.array(op.state, dtype=float)
    dt = probe.effective_dt()
    n_skip = probe.settle_steps()
    n_rec = probe.measure_periods * probe.steps_per_period()
    out = np.empty((n_rec, N_MEAS))
    status = kernel.integrate(params, x, dt, n_skip, n_rec, out)
    if status < 0:
        step = -status - 1
        raise NumericalDivergence(
            f"state norm exceeded limit at t={step * dt:.6g} s ({probe.omega_p:g} Hz probe)"
        )
    t = (n_skip + np.arange(n_rec)) * dt
    return TimeSeriesRecord(t, out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(),
                            out[:, 3].copy(), out[:, 4].copy(), dt, probe.omega_p, probe.experiment)

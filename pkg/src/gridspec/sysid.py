"""Frequency-response identification from probing runs.

Phasors are plain complex numbers in the sine-referenced convention

    x(t) = x0 + |X| sin(omega_p t + arg X),

with ``t`` measured from the start of the probe.  Transfer matrices map the
power *drawn* from the bus (load convention, ``-p`` and ``-q`` of the device)
to bus frequency and voltage magnitude, so a droop device identifies as
``+m_p / (1 + j omega tau)``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import GridSpecError, IllConditioned, InvalidParams, NonIntegerWindow, UndersampledSignal
from .freq_core import FrequencyResponse
from .specs import OmegaGrid
from .testbench import ProbeConfig, TestbenchConfig, TimeSeriesRecord, simulate_probe_run, solve_steady_state

MIN_SAMPLES_PER_PERIOD = 20
CHANNELS = ("g_wp", "g_wq", "g_vp", "g_vq")
_CHANNEL_INDEX = {"g_wp": (0, 0), "g_wq": (0, 1), "g_vp": (1, 0), "g_vq": (1, 1)}


def fourier_phasor(signal, omega_p: float, dt: float, t0: float = 0.0) -> complex:
    """Fundamental Fourier coefficient of a uniformly sampled signal.

    Parameters
    ----------
    signal : array_like
        Samples ``x(t0 + k dt)``.
    omega_p : float
        Fundamental frequency, Hz.
    dt : float
        Sample spacing, s.
    t0 : float
        Time of the first sample; phases are referred to ``t = 0``.

    Returns
    -------
    complex
        ``X`` such that the fundamental component is ``|X| sin(2 pi omega_p t + arg X)``.

    Raises
    ------
    NonIntegerWindow
        If the record does not span a whole number of periods.
    UndersampledSignal
        If there are fewer than 20 samples per period.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidParams("signal must be a nonempty 1-D sequence")
    if not (omega_p > 0 and dt > 0):
        raise InvalidParams("omega_p and dt must be > 0")
    per_period = 1.0 / (omega_p * dt)
    if per_period < MIN_SAMPLES_PER_PERIOD * (1 - 1e-9):
        raise UndersampledSignal(f"{per_period:.3g} samples per period at {omega_p:g} Hz (< {MIN_SAMPLES_PER_PERIOD})")
    periods = x.size * dt * omega_p
    if periods < 1 - 1e-9 or abs(periods - round(periods)) > 1e-6:
        raise NonIntegerWindow(f"window spans {periods:.9g} periods of {omega_p:g} Hz")
    w = 2.0 * math.pi * omega_p
    t = t0 + dt * np.arange(x.size)
    return complex(2j / x.size * np.sum(x * np.exp(-1j * w * t)))


def theta_to_omega(delta_theta: complex, omega_p: float) -> complex:
    """Angle phasor to frequency phasor: ``j * 2 pi omega_p * delta_theta``."""
    if not omega_p > 0:
        raise InvalidParams("omega_p must be > 0")
    return 1j * (2.0 * math.pi * omega_p) * complex(delta_theta)


@dataclass(frozen=True)
class ExperimentPair:
    """Phasors from the frequency (column 0) and voltage (column 1) experiments.

    ``Y`` rows are (d_omega, d_V); ``U`` rows are (d_p, d_q) in load convention.
    """

    omega_p: float
    Y: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        Y = np.array(self.Y, dtype=complex)
        U = np.array(self.U, dtype=complex)
        if Y.shape != (2, 2) or U.shape != (2, 2):
            raise InvalidParams("Y and U must be 2x2")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(U))):
            raise InvalidParams(f"non-finite phasors at {self.omega_p:g} Hz")
        Y.setflags(write=False)
        U.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "U", U)

    @property
    def cond_u(self) -> float:
        return float(np.linalg.cond(self.U))


def recover_transfer_matrix(pair: ExperimentPair, cond_limit: float = 1e6) -> np.ndarray:
    """``G = Y U^-1`` with a conditioning guard and a residual check."""
    cond = pair.cond_u
    if not cond <= cond_limit:
        raise IllConditioned(
            f"cond(U)={cond:.3g} > {cond_limit:g} at {pair.omega_p:g} Hz: "
            "the two experiments did not independently excite p and q"
        )
    G = np.linalg.solve(pair.U.T, pair.Y.T).T
    scale = np.linalg.norm(pair.Y)
    if np.linalg.norm(pair.Y - G @ pair.U) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise IllConditioned(f"matrix recovery residual too large at {pair.omega_p:g} Hz")
    return G


@dataclass(frozen=True)
class ProbeTemplate:
    """Everything of a :class:`ProbeConfig` except the frequency and which amplitude is used."""

    A_V: float = 0.01
    A_omega: float = 2 * math.pi * 0.05
    V_star: float = 1.0
    omega0: float = 2 * math.pi * 50
    dt: float = 1e-4
    settle_periods: int = 10
    measure_periods: int = 4
    min_settle_time: float = 0.0

    def __post_init__(self):
        if self.A_V == 0.0 or self.A_omega == 0.0:
            raise InvalidParams("identification needs nonzero A_V and A_omega")

    def probe(self, omega_p: float, experiment: str) -> ProbeConfig:
        if experiment not in ("w", "V"):
            raise InvalidParams(f"experiment must be 'w' or 'V', got {experiment!r}")
        return ProbeConfig(
            omega_p=omega_p,
            A_V=self.A_V if experiment == "V" else 0.0,
            A_omega=self.A_omega if experiment == "w" else 0.0,
            V_star=self.V_star,
            omega0=self.omega0,
            dt=self.dt,
            settle_periods=self.settle_periods,
            measure_periods=self.measure_periods,
            min_settle_time=self.min_settle_time,
        )


@dataclass(frozen=True)
class RunPhasors:
    d_omega: complex  # bus frequency, from the angle phasor
    d_V: complex
    d_p: complex  # injected by the device
    d_q: complex
    d_omega_ref: complex  # device internal reference frequency


def extract_phasors(rec: TimeSeriesRecord) -> RunPhasors:
    f, dt, t0 = rec.omega_p, rec.dt, float(rec.t[0])
    ph = lambda x: fourier_phasor(x, f, dt, t0)  # noqa: E731
    return RunPhasors(
        d_omega=theta_to_omega(ph(rec.theta), f),
        d_V=ph(rec.V),
        d_p=ph(rec.p),
        d_q=ph(rec.q),
        d_omega_ref=ph(rec.omega_ref),
    )


def pair_from_runs(run_w: RunPhasors, run_v: RunPhasors, omega_p: float) -> ExperimentPair:
    Y = [[run_w.d_omega, run_v.d_omega], [run_w.d_V, run_v.d_V]]
    U = [[-run_w.d_p, -run_v.d_p], [-run_w.d_q, -run_v.d_q]]
    return ExperimentPair(omega_p, Y, U)


@dataclass(frozen=True)
class FrequencyResponseMatrix:
    """Identified 2x2 bus model on a frequency grid.

    ``G[k]`` is ``[[g_wp, g_wq], [g_vp, g_vq]]`` at ``hz[k]``.  ``extras`` holds
    the grid-disturbance responses of the frequency experiment: ``g_w_wg``
    (bus frequency), ``g_wref_wg`` (internal reference frequency) and
    ``g_p_wg`` (drawn power), all per unit of ``A_omega``.
    """

    hz: np.ndarray
    G: np.ndarray
    cond_u: np.ndarray
    extras: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        hz = np.array(self.hz, dtype=float)
        G = np.array(self.G, dtype=complex)
        cond = np.array(self.cond_u, dtype=float)
        if hz.ndim != 1 or G.shape != (hz.size, 2, 2) or cond.shape != hz.shape:
            raise InvalidParams("inconsistent FrequencyResponseMatrix shapes")
        if hz.size > 1 and not np.all(np.diff(hz) > 0):
            raise InvalidParams("frequency grid must be strictly increasing")
        if not np.all(np.isfinite(G)):
            raise InvalidParams("non-finite transfer matrix entry")
        extras = {}
        for k, v in self.extras.items():
            a = np.array(v, dtype=complex)
            if a.shape != hz.shape:
                raise InvalidParams(f"extra channel {k!r} has wrong length")
            a.setflags(write=False)
            extras[k] = a
        for a in (hz, G, cond):
            a.setflags(write=False)
        object.__setattr__(self, "hz", hz)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "cond_u", cond)
        object.__setattr__(self, "extras", extras)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.hz

    def __len__(self):
        return self.hz.size

    def channel(self, name: str) -> FrequencyResponse:
        if name in _CHANNEL_INDEX:
            i, j = _CHANNEL_INDEX[name]
            values = self.G[:, i, j]
        elif name in self.extras:
            values = self.extras[name]
        else:
            raise KeyError(f"unknown channel {name!r}")
        return FrequencyResponse.from_hz(self.hz, values)


def worker_count(n_tasks: int, workers: Optional[int] = None) -> int:
    """Thread count: explicit ``workers``, else ``GRIDSPEC_THREADS``, else the CPU count."""
    if workers is None:
        env = os.environ.get("GRIDSPEC_THREADS")
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise InvalidParams(f"GRIDSPEC_THREADS must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    return max(1, min(int(workers), n_tasks))


def _tagged(exc: Exception, omega_p: float) -> Exception:
    msg = f"at omega_p={omega_p!r} Hz: {exc}"
    try:
        new = type(exc)(msg)
    except Exception:  # exotic constructor
        new = GridSpecError(msg)
    new.omega_p = omega_p
    return new


def identify_sweep(
    cfg: TestbenchConfig,
    grid: Optional[OmegaGrid] = None,
    template: Optional[ProbeTemplate] = None,
    cond_limit: float = 1e6,
    workers: Optional[int] = None,
    backend: Optional[str] = None,
    keep_records: bool = False,
):
    """Run both probing experiments at every grid frequency and recover ``G``.

    Returns the :class:`FrequencyResponseMatrix`; with ``keep_records=True``
    returns ``(frm, records)`` where ``records`` lists the time series in grid
    order, frequency experiment first.
    """
    grid = grid if grid is not None else OmegaGrid.default()
    template = template if template is not None else ProbeTemplate(V_star=cfg.v_star, omega0=cfg.omega0)
    op = solve_steady_state(cfg)
    tasks = [(f, e) for f in grid.hz for e in ("w", "V")]

    def run(task):
        f, e = task
        try:
            return simulate_probe_run(cfg, template.probe(float(f), e), backend=backend, op=op)
        except GridSpecError as exc:
            raise _tagged(exc, float(f)) from exc

    with ThreadPoolExecutor(max_workers=worker_count(len(tasks), workers)) as pool:
        records = list(pool.map(run, tasks))

    G, cond, g_w, g_ref, g_p = [], [], [], [], []
    for k, f in enumerate(grid.hz):
        rw, rv = extract_phasors(records[2 * k]), extract_phasors(records[2 * k + 1])
        pair = pair_from_runs(rw, rv, float(f))
        try:
            G.append(recover_transfer_matrix(pair, cond_limit))
        except GridSpecError as exc:
            raise _tagged(exc, float(f)) from exc
        cond.append(pair.cond_u)
        g_w.append(rw.d_omega / template.A_omega)
        g_ref.append(rw.d_omega_ref / template.A_omega)
        g_p.append(-rw.d_p / template.A_omega)
    frm = FrequencyResponseMatrix(
        grid.hz, G, cond, {"g_w_wg": g_w, "g_wref_wg": g_ref, "g_p_wg": g_p}
    )
    return (frm, records) if keep_records else frm

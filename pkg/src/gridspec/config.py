"""Line-based ``key=value`` pipeline configuration.

Keys use dotted section prefixes (``device.kind=droop``); ``#`` starts a
comment; blank lines are ignored.  Physics parameters have no defaults:
every one the chosen pipeline needs must be present, and every error names
the offending key.

Example::

    mode = analytic
    device.kind = droop
    device.m_p = 0.05
    device.tau = 0.1
    network.omega0 = 314.1592653589793
    network.v_star = 1.0
    network.scr = 5
    network.rho = 31.41592653589793
    spec.gamma = line
    spec.psi = 1.0
    spec.mode = static
    spec.tau_f = fit
    spec.m_p = 0.05
    spec.eps = 1.0
    spec.omega_bar = 0.1
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .devices import DeviceParams, InnerLoopConfig, device_params
from .errors import ConfigError, GridSpecError
from .network import GraphBounds, LineParams, gamma_bound, gamma_single_line
from .specs import OmegaGrid
from .sysid import ProbeTemplate
from .testbench import DeviceUnderTest, TestbenchConfig

DEVICE_FIELDS = {
    "droop": ("m_p", "tau"),
    "gfl": ("k_p", "k_i", "tau_d", "D"),
    "gfm_pi": ("xi_p", "xi_i", "tau"),
}
CHECKS = ("interop", "smoothing", "droop_band")
KNOWN_KEYS = frozenset(
    ["mode", "grid", "device.kind", "device.k_qv", "device.inner.mode", "device.inner.T_a", "device.inner.ell_f"]
    + [f"device.{n}" for names in DEVICE_FIELDS.values() for n in names]
    + [f"network.{n}" for n in ("omega0", "v_star", "scr", "ell", "r", "rho", "dispatch")]
    + [f"probe.{n}" for n in ("A_V", "A_omega", "dt", "settle_periods", "measure_periods", "min_settle_time")]
    + [f"spec.{n}" for n in ("checks", "gamma", "e_max", "ell_min", "v_max", "psi", "rho", "mode",
                             "tau_f", "tol_mag", "m_p", "eps", "omega_bar", "cond_limit")]
    + ["output.dir", "output.timeseries"]
)


def parse_kv(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse ``key=value`` lines; duplicate or malformed keys are errors."""
    out: Dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{n}: expected key=value, got {raw.strip()!r}", key or None)
        if key in out:
            raise ConfigError(f"duplicate key ({source} line {n})", key)
        out[key] = value
    return out


class _Reader:
    def __init__(self, kv: Dict[str, str]):
        self.kv = kv
        self.used = set()

    def has(self, key):
        return key in self.kv

    def raw(self, key, default=None, required=True):
        if key not in self.kv:
            if required and default is None:
                raise ConfigError("missing required key", key)
            return default
        self.used.add(key)
        return self.kv[key]

    def num(self, key, default=None, required=True, positive=False, nonneg=False):
        v = self.raw(key, default, required)
        if v is None:
            return None
        try:
            x = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"must be a number, got {v!r}", key) from None
        if not math.isfinite(x):
            raise ConfigError("must be finite", key)
        if positive and not x > 0:
            raise ConfigError(f"must be > 0, got {v}", key)
        if nonneg and not x >= 0:
            raise ConfigError(f"must be >= 0, got {v}", key)
        return x

    def integer(self, key, default=None, required=True):
        v = self.raw(key, default, required)
        if v is None:
            return None
        try:
            return int(str(v))
        except ValueError:
            raise ConfigError(f"must be an integer, got {v!r}", key) from None

    def choice(self, key, options, default=None, required=True):
        v = self.raw(key, default, required)
        if v is not None and v not in options:
            raise ConfigError(f"must be one of {', '.join(options)}; got {v!r}", key)
        return v

    def boolean(self, key, default=None):
        v = self.raw(key, default, required=default is None)
        if isinstance(v, bool):
            return v
        if v.lower() in ("true", "yes", "1"):
            return True
        if v.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"must be true or false, got {v!r}", key)


def parse_grid(text: str, key: str = "grid") -> OmegaGrid:
    try:
        freqs = tuple(float(x) for x in text.split(",") if x.strip())
        return OmegaGrid(freqs)
    except (ValueError, GridSpecError) as exc:
        raise ConfigError(str(exc), key) from None


@dataclass(frozen=True)
class SpecSection:
    checks: Tuple[str, ...]
    gamma: float
    psi: float
    rho: float
    mode: str
    tau_f: Union[float, str]
    tol_mag: float
    m_p: Optional[float]
    eps: Optional[float]
    omega_bar: Optional[float]


@dataclass(frozen=True)
class PipelineConfig:
    mode: str
    kind: str
    params: DeviceParams
    inner: InnerLoopConfig
    k_qv: float
    line: LineParams
    dispatch: Optional[float]
    probe: Optional[ProbeTemplate]
    spec: SpecSection
    out_dir: Path
    write_timeseries: bool
    grid: Optional[OmegaGrid]
    cond_limit: float
    digest: str = ""
    raw: Dict[str, str] = field(default_factory=dict, compare=False, repr=False)

    def testbench(self) -> TestbenchConfig:
        if self.dispatch is None:
            raise ConfigError("missing required key", "network.dispatch")
        try:
            dut = DeviceUnderTest(self.params, self.inner, self.k_qv)
            return TestbenchConfig(self.line, dut, self.dispatch)
        except GridSpecError as exc:
            raise ConfigError(str(exc), "device") from None


def _device(r: _Reader, simulate: bool):
    kind = r.choice("device.kind", tuple(DEVICE_FIELDS))
    vals = {n: r.num(f"device.{n}", positive=True) for n in DEVICE_FIELDS[kind]}
    params = device_params(kind, **vals)
    mode = r.choice("device.inner.mode", ("none", "lag"), default=None if simulate else "none")
    T_a = r.num("device.inner.T_a", positive=True, required=mode == "lag") if mode == "lag" else None
    if mode != "lag" and r.has("device.inner.T_a"):
        raise ConfigError("only valid with device.inner.mode=lag", "device.inner.T_a")
    ell_f = r.num("device.inner.ell_f", nonneg=True, required=simulate and kind != "gfl", default=None)
    k_qv = 0.0
    if kind == "gfl":
        k_qv = r.num("device.k_qv", nonneg=True, required=simulate, default=None) or 0.0
    try:
        inner = InnerLoopConfig(mode, T_a, ell_f or 0.0)
    except GridSpecError as exc:
        raise ConfigError(str(exc), "device.inner.mode") from None
    return kind, params, inner, k_qv


def _line(r: _Reader) -> LineParams:
    omega0 = r.num("network.omega0", positive=True)
    v = r.num("network.v_star", positive=True)
    if r.has("network.scr") == r.has("network.ell"):
        raise ConfigError("give exactly one of network.scr and network.ell", "network.scr")
    if r.has("network.r") == r.has("network.rho"):
        raise ConfigError("give exactly one of network.r and network.rho", "network.rho")
    if r.has("network.scr"):
        ell = v * v / (r.num("network.scr", positive=True) * omega0)
    else:
        ell = r.num("network.ell", positive=True)
    if r.has("network.rho"):
        res = r.num("network.rho", nonneg=True) * ell
    else:
        res = r.num("network.r", nonneg=True)
    return LineParams(ell=ell, r=res, v_n=v, v_k=v, omega0=omega0)


def _spec(r: _Reader, line: LineParams) -> SpecSection:
    checks_raw = r.raw("spec.checks", default=",".join(CHECKS))
    checks = tuple(c.strip() for c in checks_raw.split(",") if c.strip())
    for c in checks:
        if c not in CHECKS:
            raise ConfigError(f"unknown check {c!r} (have {', '.join(CHECKS)})", "spec.checks")
    gamma = psi = rho = tau_f = m_p = eps = omega_bar = None
    mode = "static"
    tol_mag = 0.0
    if "interop" in checks:
        if r.has("spec.gamma"):
            g = r.raw("spec.gamma")
            gamma = gamma_single_line(line) if g == "line" else r.num("spec.gamma", positive=True)
        else:
            try:
                bounds = GraphBounds(r.num("spec.e_max", positive=True), r.num("spec.ell_min", positive=True),
                                     r.num("spec.v_max", positive=True))
            except ConfigError as exc:
                raise ConfigError("missing; give spec.gamma or all of spec.e_max, spec.ell_min, spec.v_max", exc.key) from None
            gamma = gamma_bound(bounds, line.omega0)
        psi = r.num("spec.psi", positive=True)
        rho = r.num("spec.rho", nonneg=True, default=line.rho, required=False)
        mode = r.choice("spec.mode", ("static", "dynamic"))
    if "smoothing" in checks:
        t = r.raw("spec.tau_f")
        tau_f = "fit" if t == "fit" else r.num("spec.tau_f", positive=True)
        tol_mag = r.num("spec.tol_mag", nonneg=True, default=0.0, required=False)
    if "droop_band" in checks:
        m_p = r.num("spec.m_p", positive=True)
        eps = r.num("spec.eps", positive=True)
        omega_bar = r.num("spec.omega_bar", positive=True)
    return SpecSection(checks, gamma, psi, rho, mode, tau_f, tol_mag, m_p, eps, omega_bar)


def _probe(r: _Reader, line: LineParams) -> ProbeTemplate:
    try:
        return ProbeTemplate(
            A_V=r.num("probe.A_V"),
            A_omega=r.num("probe.A_omega"),
            V_star=line.v_k,
            omega0=line.omega0,
            dt=r.num("probe.dt", positive=True),
            settle_periods=r.integer("probe.settle_periods", default="10", required=False),
            measure_periods=r.integer("probe.measure_periods", default="4", required=False),
            min_settle_time=r.num("probe.min_settle_time", nonneg=True, default=0.0, required=False),
        )
    except GridSpecError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "probe") from None


def build_config(kv: Dict[str, str], mode_override: Optional[str] = None,
                 out_override=None, grid_override: Optional[str] = None) -> PipelineConfig:
    r = _Reader(kv)
    mode = r.choice("mode", ("analytic", "simulate"))
    if mode_override is not None:
        if mode_override not in ("analytic", "simulate"):
            raise ConfigError(f"--mode must be analytic or simulate, got {mode_override!r}", "mode")
        mode = mode_override
    simulate = mode == "simulate"
    try:
        kind, params, inner, k_qv = _device(r, simulate)
        line = _line(r)
        dispatch = r.num("network.dispatch", required=simulate)
        probe = _probe(r, line) if simulate else None
        spec = _spec(r, line)
    except ConfigError:
        raise
    except GridSpecError as exc:  # parameter validation
        raise ConfigError(str(exc), "device") from None
    out_dir = Path(out_override or r.raw("output.dir", default="out", required=False))
    ts = r.boolean("output.timeseries", default=False)
    grid_text = grid_override if grid_override is not None else r.raw("grid", required=False)
    grid = parse_grid(grid_text, "grid") if grid_text else None
    cond_limit = r.num("spec.cond_limit", positive=True, default=1e6, required=False)
    unknown = sorted(set(kv) - KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown key", unknown[0])
    canonical = "".join(f"{k}={kv[k]}\n" for k in sorted(kv))
    overrides = f"#mode={mode}\n#grid={grid_text}\n"
    digest = hashlib.sha256((canonical + overrides).encode()).hexdigest()
    return PipelineConfig(mode, kind, params, inner, k_qv, line, dispatch, probe, spec, out_dir, ts,
                          grid, cond_limit, digest, dict(kv))


def load_config(path, **overrides) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(parse_kv(text, str(path)), **overrides)

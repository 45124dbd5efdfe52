"""Analyze / identify / verify pipeline behind the command-line interface."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import io as gio
from .config import PipelineConfig
from .devices import build_device
from .errors import ConfigError, InvalidParams, NotHurwitz, PoleAtZero, UndampedLine
from .freq_core import FrequencyResponse, RationalTransferFunction, closed_loop_response
from .network import NetworkAbstraction, static_gain
from .specs import (
    OmegaGrid,
    PerfReport,
    StabilityVerdict,
    check_droop_band,
    check_smoothing,
    fit_tau_f,
    interop_check,
)
from .sysid import FrequencyResponseMatrix, identify_sweep

EXIT_PASS, EXIT_FAIL, EXIT_NOT_APPLICABLE, EXIT_ERROR = 0, 1, 2, 3
_STATUS_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "not_applicable": EXIT_NOT_APPLICABLE, "error": EXIT_ERROR}


@dataclass(frozen=True)
class CheckOutcome:
    status: str  # pass | fail | not_applicable | error
    detail: str = ""


@dataclass
class VerdictBundle:
    provenance: str  # analytic | identified
    digest: str
    outcomes: Dict[str, CheckOutcome] = field(default_factory=dict)
    stability: Optional[StabilityVerdict] = None
    smoothing: Optional[PerfReport] = None
    droop_band: Optional[PerfReport] = None
    tau_f: Optional[float] = None

    @property
    def exit_code(self) -> int:
        """Worst outcome wins: error > not applicable > fail > pass."""
        return max((_STATUS_EXIT[o.status] for o in self.outcomes.values()), default=EXIT_PASS)

    def items(self) -> Dict[str, object]:
        d: Dict[str, object] = {"config.digest": self.digest, "provenance": self.provenance}
        for name, o in self.outcomes.items():
            d[f"{name}.status"] = o.status
            d[f"{name}.passed"] = o.status == "pass"
            if o.detail:
                d[f"{name}.detail"] = o.detail
            if name == "stability" and self.stability is not None:
                v = self.stability
                d["stability.mode"] = v.mode
                d["stability.ratio"] = v.ratio
                d["stability.margin"] = v.margin
                if v.alpha_interval is not None:
                    d["stability.alpha_lo"], d["stability.alpha_hi"] = v.alpha_interval
                w_omega, w_val = v.worst_sample
                d["stability.worst_omega_rad_s"] = w_omega
                d["stability.worst_re_w"] = w_val.real
                d["stability.worst_im_w"] = w_val.imag
            rep = getattr(self, name, None) if name in ("smoothing", "droop_band") else None
            if rep is not None:
                if name == "smoothing":
                    d["smoothing.tau_f"] = self.tau_f
                d[f"{name}.violations"] = len(rep.violations)
                for i, (w, mag, bound) in enumerate(rep.violations):
                    d[f"{name}.violation.{i}"] = f"{gio.fmt(w / (2 * math.pi))},{gio.fmt(mag)},{gio.fmt(bound)}"
        d["exit_code"] = self.exit_code
        return d


@dataclass
class PipelineResult:
    bundle: VerdictBundle
    frm: Optional[FrequencyResponseMatrix] = None
    records: List = field(default_factory=list)


def perf_grid(cfg: PipelineConfig) -> OmegaGrid:
    return cfg.grid if cfg.grid is not None else OmegaGrid.default()


def analytic_model(cfg: PipelineConfig) -> Tuple[RationalTransferFunction, RationalTransferFunction, RationalTransferFunction]:
    """Device model and its closed loops ``(g, g_w_wg, g_p_wg)`` on the configured line."""
    g = build_device(cfg.kind, cfg.params)
    g_w, g_p = closed_loop_response(g, static_gain(cfg.line))
    return g, g_w, g_p


def analytic_frm(cfg: PipelineConfig, grid: OmegaGrid) -> FrequencyResponseMatrix:
    """Analytic responses packed like an identified sweep.

    The analytic model is single-input single-output, so only ``g_wp`` is
    filled; the other matrix entries are zero and ``cond_u`` is NaN.
    """
    g, g_w, g_p = analytic_model(cfg)
    w = grid.omega
    G = np.zeros((w.size, 2, 2), dtype=complex)
    G[:, 0, 0] = g(w)
    return FrequencyResponseMatrix(grid.hz, G, np.full(w.size, np.nan),
                                   {"g_w_wg": g_w(w), "g_p_wg": g_p(w)})


def _has_pole_at_zero(cfg: PipelineConfig) -> bool:
    return build_device(cfg.kind, cfg.params).den[0] == 0.0


def _stability(cfg: PipelineConfig, g, grid: OmegaGrid, bundle: VerdictBundle) -> None:
    spec = cfg.spec
    if _has_pole_at_zero(cfg):
        bundle.outcomes["stability"] = CheckOutcome("not_applicable", "not applicable: pole at zero")
        return
    try:
        net = NetworkAbstraction(spec.gamma, spec.rho, cfg.line.omega0, spec.psi)
        verdict = interop_check(g, net, grid, spec.mode)
    except PoleAtZero:
        bundle.outcomes["stability"] = CheckOutcome("not_applicable", "not applicable: pole at zero")
        return
    except NotHurwitz as exc:
        bundle.outcomes["stability"] = CheckOutcome("not_applicable", f"not applicable: {exc}")
        return
    except UndampedLine as exc:
        raise ConfigError(str(exc), "spec.rho") from None
    bundle.stability = verdict
    bundle.outcomes["stability"] = CheckOutcome("pass" if verdict.passed else "fail")


def _smoothing(cfg: PipelineConfig, frf: FrequencyResponse, bundle: VerdictBundle, provenance: str) -> None:
    spec = cfg.spec
    tau_f = spec.tau_f
    if tau_f == "fit":
        try:
            tau_f = fit_tau_f(frf)
        except InvalidParams:
            # no bound of this family covers a curve above unity gain
            mag = np.abs(frf.values)
            bad = mag > 1.0
            viol = tuple((float(w), float(m), 1.0) for w, m in zip(frf.omega[bad], mag[bad]))
            bundle.smoothing = PerfReport(False, viol, "smoothing", provenance)
            bundle.outcomes["smoothing"] = CheckOutcome("fail", "gain exceeds unity; no tau_f fits")
            return
    rep = check_smoothing(frf, tau_f, spec.tol_mag, provenance=provenance)
    bundle.tau_f = tau_f
    bundle.smoothing = rep
    bundle.outcomes["smoothing"] = CheckOutcome("pass" if rep.passed else "fail")


def _droop_band(cfg: PipelineConfig, frf: FrequencyResponse, bundle: VerdictBundle, provenance: str) -> None:
    spec = cfg.spec
    rep = check_droop_band(frf, spec.m_p, spec.eps, spec.omega_bar, provenance=provenance)
    bundle.droop_band = rep
    bundle.outcomes["droop_band"] = CheckOutcome("pass" if rep.passed else "fail")


def run_analytic(cfg: PipelineConfig) -> PipelineResult:
    bundle = VerdictBundle("analytic", cfg.digest)
    grid = perf_grid(cfg)
    frm = analytic_frm(cfg, grid)
    g, _, _ = analytic_model(cfg)
    checks = cfg.spec.checks
    if "interop" in checks:
        _stability(cfg, g, cfg.grid if cfg.grid is not None else OmegaGrid.dense(), bundle)
    if "smoothing" in checks:
        _smoothing(cfg, frm.channel("g_w_wg"), bundle, "analytic")
    if "droop_band" in checks:
        _droop_band(cfg, frm.channel("g_p_wg"), bundle, "analytic")
    return PipelineResult(bundle, frm)


def run_identify(cfg: PipelineConfig, backend: Optional[str] = None) -> PipelineResult:
    if cfg.probe is None:
        raise ConfigError("identification needs the probe section (mode=simulate)", "mode")
    frm, records = identify_sweep(cfg.testbench(), perf_grid(cfg), cfg.probe, cfg.cond_limit,
                                  backend=backend, keep_records=True)
    return PipelineResult(VerdictBundle("identified", cfg.digest), frm, records if cfg.write_timeseries else [])


def run_simulate(cfg: PipelineConfig, backend: Optional[str] = None) -> PipelineResult:
    res = run_identify(cfg, backend)
    bundle, frm = res.bundle, res.frm
    checks = cfg.spec.checks
    if "interop" in checks:
        _stability(cfg, frm.channel("g_wp"), OmegaGrid(tuple(frm.hz)), bundle)
    if "smoothing" in checks:
        _smoothing(cfg, frm.channel("g_w_wg"), bundle, "identified")
    if "droop_band" in checks:
        _droop_band(cfg, frm.channel("g_p_wg"), bundle, "identified")
    return res


def run(cfg: PipelineConfig, backend: Optional[str] = None) -> PipelineResult:
    return run_analytic(cfg) if cfg.mode == "analytic" else run_simulate(cfg, backend)


def export(res: PipelineResult, out_dir, verdicts: bool = True) -> List[Path]:
    """Write FRF, Bode, Nyquist, time-series and verdict files; returns the paths."""
    out = Path(out_dir)
    paths = []
    if res.frm is not None:
        paths.append(gio.write_frf(res.frm, out / "frf.csv"))
        channels = ["g_wp"]
        if res.bundle.provenance == "identified":
            channels += ["g_wq", "g_vp", "g_vq"]
        channels += sorted(res.frm.extras)
        for ch in channels:
            paths.append(gio.write_bode(res.frm.channel(ch), out / f"bode_{ch}.csv"))
    if res.bundle.stability is not None:
        paths.append(gio.write_nyquist(res.bundle.stability.nyquist_rows(), out / "nyquist.csv"))
    for rec in res.records:
        paths.append(gio.write_timeseries(rec, out))
    if verdicts:
        paths.append(gio.write_verdicts(res.bundle.items(), out / "verdicts.txt"))
    return paths

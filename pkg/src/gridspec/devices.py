"""Reduced-order device models mapping bus power demand to bus frequency."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .errors import InvalidParams
from .freq_core import RationalTransferFunction, polymul


def _require_positive(obj, *names):
    for name in names:
        value = getattr(obj, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise InvalidParams(f"{type(obj).__name__}.{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class DroopParams:
    m_p: float  # (rad/s)/p.u.
    tau: float  # s, power-measurement filter

    def __post_init__(self):
        _require_positive(self, "m_p", "tau")


@dataclass(frozen=True)
class GflParams:
    k_p: float
    k_i: float
    tau_d: float  # s
    D: float  # p.u./(rad/s)

    def __post_init__(self):
        _require_positive(self, "k_p", "k_i", "tau_d", "D")


@dataclass(frozen=True)
class GfmPiParams:
    xi_p: float
    xi_i: float
    tau: float  # s

    def __post_init__(self):
        _require_positive(self, "xi_p", "xi_i", "tau")


@dataclass(frozen=True)
class InnerLoopConfig:
    """Inner-loop surrogate used by the time-domain testbench.

    ``mode="none"``: the converter voltage equals the outer-loop reference and
    sits behind the filter inductance ``ell_f`` (p.u.·s), so the measured bus
    voltage carries the filter drop.  ``mode="lag"``: the bus voltage is
    regulated to the reference through a first-order lag ``T_a``; for GFL
    devices ``T_a`` is the current-loop lag instead.
    """

    mode: str = "none"
    T_a: Optional[float] = None
    ell_f: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "lag"):
            raise InvalidParams(f"inner-loop mode must be 'none' or 'lag', got {self.mode!r}")
        if self.mode == "lag":
            if self.T_a is None:
                raise InvalidParams("InnerLoopConfig.T_a is required when mode='lag'")
            _require_positive(self, "T_a")
        elif self.T_a is not None:
            raise InvalidParams("InnerLoopConfig.T_a is only allowed when mode='lag'")
        if not (math.isfinite(self.ell_f) and self.ell_f >= 0):
            raise InvalidParams("InnerLoopConfig.ell_f must be >= 0")


DeviceParams = Union[DroopParams, GflParams, GfmPiParams]

_KINDS = {"droop": DroopParams, "gfl": GflParams, "gfm_pi": GfmPiParams}


def build_device(kind: str, params: DeviceParams) -> RationalTransferFunction:
    """Transfer function from bus power demand to bus frequency.

    * ``droop``:  ``m_p / (tau s + 1)``
    * ``gfl``:    ``(s^2 + k_p s + k_i)/(k_p s + k_i) * (tau_d s + 1)/D``
    * ``gfm_pi``: ``(xi_i s + xi_p) / (tau s^2 + s)``
    """
    expected = _KINDS.get(kind)
    if expected is None:
        raise InvalidParams(f"unknown device kind {kind!r}")
    if not isinstance(params, expected):
        raise InvalidParams(f"device kind {kind!r} needs {expected.__name__}")
    if kind == "droop":
        return RationalTransferFunction((params.m_p,), (1.0, params.tau))
    if kind == "gfl":
        p = params
        num = polymul((p.k_i, p.k_p, 1.0), (1.0, p.tau_d))
        den = (p.D * p.k_i, p.D * p.k_p)
        return RationalTransferFunction(num, den)
    return RationalTransferFunction((params.xi_p, params.xi_i), (0.0, 1.0, params.tau))


def device_params(kind: str, **values) -> DeviceParams:
    expected = _KINDS.get(kind)
    if expected is None:
        raise InvalidParams(f"unknown device kind {kind!r}")
    return expected(**values)


def fastest_time_constant(params: DeviceParams, inner: Optional[InnerLoopConfig] = None) -> float:
    taus = [getattr(params, n) for n in ("tau", "tau_d") if hasattr(params, n)]
    if isinstance(params, GflParams):
        # PLL natural frequency
        taus.append(1.0 / math.sqrt(params.k_i))
        taus.append(1.0 / params.k_p)
    if inner is not None and inner.T_a is not None:
        taus.append(inner.T_a)
    return min(taus)

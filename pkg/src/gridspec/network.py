"""Dynamic RL line model and the coupling constants used by the stability certificate."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParams
from .freq_core import RationalTransferFunction


@dataclass(frozen=True)
class LineParams:
    """RL line between the device bus and the grid source.

    ``ell`` is the inductance in p.u.·s (reactance is ``omega0 * ell``) and
    ``r`` the resistance in p.u., so ``rho = r / ell`` is in 1/s.
    """

    ell: float
    r: float
    v_n: float
    v_k: float
    omega0: float

    def __post_init__(self):
        for name in ("ell", "v_n", "v_k", "omega0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParams(f"LineParams.{name} must be > 0, got {v!r}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise InvalidParams(f"LineParams.r must be >= 0, got {self.r!r}")

    @property
    def rho(self) -> float:
        return self.r / self.ell

    @property
    def reactance(self) -> float:
        return self.omega0 * self.ell

    @classmethod
    def from_scr(cls, scr: float, rho: float, v: float, omega0: float) -> "LineParams":
        """Line whose short-circuit ratio on a 1 p.u. device base is ``scr``."""
        if not (scr > 0 and math.isfinite(scr)):
            raise InvalidParams(f"scr must be > 0, got {scr!r}")
        if not (rho >= 0 and math.isfinite(rho)):
            raise InvalidParams(f"rho must be >= 0, got {rho!r}")
        ell = v * v / (scr * omega0)
        return cls(ell=ell, r=rho * ell, v_n=v, v_k=v, omega0=omega0)


@dataclass(frozen=True)
class NetworkAbstraction:
    gamma: float  # coupling bound
    rho: float  # 1/s, uniform R/L ratio
    omega0: float  # rad/s
    psi: float  # device rating, p.u.

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidParams("NetworkAbstraction.gamma must be > 0")
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise InvalidParams("NetworkAbstraction.rho must be >= 0")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise InvalidParams("NetworkAbstraction.omega0 must be > 0")
        if not (self.psi > 0 and math.isfinite(self.psi)):
            raise InvalidParams("NetworkAbstraction.psi must be > 0")

    @property
    def ratio(self) -> float:
        return self.gamma / self.psi

    def mu(self) -> RationalTransferFunction:
        return line_mu(self.rho, self.omega0)

    def scaled(self, factor: float) -> "NetworkAbstraction":
        return NetworkAbstraction(self.gamma * factor, self.rho, self.omega0, self.psi)


@dataclass(frozen=True)
class GraphBounds:
    e_max: int
    ell_min: float
    v_max: float

    def __post_init__(self):
        if int(self.e_max) != self.e_max or self.e_max < 1:
            raise InvalidParams("GraphBounds.e_max must be an integer >= 1")
        if not (self.ell_min > 0 and math.isfinite(self.ell_min)):
            raise InvalidParams("GraphBounds.ell_min must be > 0")
        if not (self.v_max > 0 and math.isfinite(self.v_max)):
            raise InvalidParams("GraphBounds.v_max must be > 0")


def line_mu(rho: float, omega0: float) -> RationalTransferFunction:
    """``1 / (s^2 + 2 rho s + omega0^2 + rho^2)``."""
    return RationalTransferFunction((1.0,), (omega0 * omega0 + rho * rho, 2.0 * rho, 1.0))


def build_line_tf(p: LineParams):
    """Return ``(kappa, mu)`` so that the angle-to-power line response is ``kappa * mu(s)``."""
    if not isinstance(p, LineParams):
        raise InvalidParams("build_line_tf expects LineParams")
    kappa = p.omega0 * p.v_n * p.v_k / p.ell
    return kappa, line_mu(p.rho, p.omega0)


def static_gain(p: LineParams) -> float:
    """Quasi-steady-state synchronizing gain ``kappa * mu(0)``."""
    kappa, mu = build_line_tf(p)
    return kappa / mu.den[0]


def gamma_single_line(p: LineParams) -> float:
    """Coupling constant of a bus with this line as its only edge."""
    return 2.0 * p.omega0 * p.v_n * p.v_k / p.ell


def gamma_bound(g: GraphBounds, omega0: float) -> float:
    """``2 (e_max / ell_min) omega0 v_max^2``."""
    if not isinstance(g, GraphBounds):
        raise InvalidParams("gamma_bound expects GraphBounds")
    if not (omega0 > 0 and math.isfinite(omega0)):
        raise InvalidParams("omega0 must be > 0")
    return 2.0 * (g.e_max / g.ell_min) * omega0 * g.v_max ** 2

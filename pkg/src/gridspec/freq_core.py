"""Rational transfer functions of the Laplace variable and their frequency responses.

Polynomials are dense coefficient sequences in *ascending* powers of ``s``:
``(a0, a1, a2)`` is ``a0 + a1 s + a2 s^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateDenominator, EvaluationAtPole, InvalidParams

POLE_TOL = 1e-12


def _trim(coeffs: Sequence[float]) -> tuple:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


def polyval_jw(coeffs: Sequence[float], omega):
    """Horner evaluation of an ascending polynomial at ``s = j*omega``."""
    s = 1j * np.asarray(omega, dtype=float)
    acc = np.zeros_like(s)
    for a in reversed(coeffs):
        acc = acc * s + a
    return acc


def polymul(a: Sequence[float], b: Sequence[float]) -> tuple:
    return _trim(np.convolve(np.asarray(a, float), np.asarray(b, float)))


def polyadd(a: Sequence[float], b: Sequence[float]) -> tuple:
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return _trim(out)


@dataclass(frozen=True)
class RationalTransferFunction:
    """Real-coefficient ``num(s)/den(s)``; improper functions are allowed."""

    num: tuple
    den: tuple

    def __post_init__(self):
        num = _trim(self.num) if len(self.num) else (0.0,)
        den = _trim(self.den) if len(self.den) else ()
        if not den or den[-1] == 0.0:
            raise InvalidParams("denominator must have a nonzero highest-order coefficient")
        if not all(np.isfinite(num)) or not all(np.isfinite(den)):
            raise InvalidParams("coefficients must be finite")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def num_degree(self) -> int:
        return len(self.num) - 1 if any(self.num) else -1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        """``deg(den) - deg(num)``; negative for improper functions."""
        return self.den_degree - max(self.num_degree, 0)

    def normalized(self) -> "RationalTransferFunction":
        lead = self.den[-1]
        return RationalTransferFunction(
            tuple(a / lead for a in self.num), tuple(a / lead for a in self.den)
        )

    def __call__(self, omega):
        return evaluate(self, omega)

    def response(self, omega) -> "FrequencyResponse":
        omega = np.asarray(omega, dtype=float)
        return FrequencyResponse(omega, np.asarray(evaluate(self, omega), dtype=complex))


def evaluate(tf: RationalTransferFunction, omega):
    """Return ``num(j omega) / den(j omega)``.

    ``omega`` may be a scalar or an array (rad/s).  Raises ``EvaluationAtPole``
    when the denominator magnitude falls below ``1e-12`` times its largest
    coefficient at any requested frequency.
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidParams("omega must be finite")
    d = polyval_jw(tf.den, w)
    scale = max(abs(a) for a in tf.den)
    if np.any(np.abs(d) < POLE_TOL * scale):
        bad = np.atleast_1d(w)[np.atleast_1d(np.abs(d) < POLE_TOL * scale)]
        raise EvaluationAtPole(f"denominator vanishes at omega={bad[0]!r} rad/s")
    out = polyval_jw(tf.num, w) / d
    return complex(out) if np.ndim(out) == 0 else out


def routh_array(den: Sequence[float]):
    """Build the Routh array for an ascending coefficient sequence.

    Returns ``(first_column, events)``.  A zero leading entry in a nonzero row
    is replaced by a small positive epsilon (event ``"epsilon"``); an all-zero
    row is replaced by the derivative of the auxiliary polynomial formed from
    the row above (event ``"auxiliary"``), which flags roots symmetric about
    the origin, including imaginary-axis roots.
    """
    p = list(reversed(_trim(den)))  # descending
    n = len(p) - 1
    if n < 1:
        return [p[0]], []
    scale = max(abs(a) for a in p)
    tol = 1e-12 * scale
    eps = 1e-9 * scale
    width = n // 2 + 1
    r0 = np.zeros(width + 1)
    r1 = np.zeros(width + 1)
    r0[: len(p[0::2])] = p[0::2]
    r1[: len(p[1::2])] = p[1::2]
    rows = [r0, r1]
    events = []
    # row k carries powers s^(n-k), s^(n-k-2), ...
    for k in range(1, n + 1):
        row = rows[k]
        if np.all(np.abs(row) <= tol):
            prev = rows[k - 1]
            order = n - k + 1
            row = np.zeros(width + 1)
            for idx in range(width):
                power = order - 2 * idx
                if power <= 0:
                    break
                row[idx] = prev[idx] * power
            rows[k] = row
            events.append(("auxiliary", k))
        if abs(rows[k][0]) <= tol:
            rows[k][0] = eps
            events.append(("epsilon", k))
        if k == n:
            break
        a, b = rows[k - 1], rows[k]
        nxt = np.zeros(width + 1)
        for idx in range(width):
            nxt[idx] = (b[0] * a[idx + 1] - a[0] * b[idx + 1]) / b[0]
        rows.append(nxt)
    return [r[0] for r in rows[: n + 1]], events


def is_hurwitz(tf_or_den: Union[RationalTransferFunction, Sequence[float]]) -> bool:
    """True iff every denominator root lies strictly in the open left half-plane.

    Uses the Routh-Hurwitz tabular test, no root finding.  Any zero-pivot or
    auxiliary-polynomial event means roots on or right of the imaginary axis,
    so the verdict is ``False`` in that case.
    """
    den = tf_or_den.den if isinstance(tf_or_den, RationalTransferFunction) else tf_or_den
    den = _trim(den)
    if all(a == 0.0 for a in den):
        raise DegenerateDenominator("denominator is identically zero")
    if len(den) == 1:
        return True
    sign = 1.0 if den[-1] > 0 else -1.0
    if any(sign * a <= 0.0 for a in den):
        return False
    first, events = routh_array([sign * a for a in den])
    if events:
        return False
    return all(x > 0 for x in first)


def closed_loop_response(g_wp: RationalTransferFunction, k_static: float):
    """Closed loops of a bus model against a stiff source through a static line.

    Returns ``(g_omega_omegag, g_p_omegag)`` with
    ``g_omega_omegag = k g / (s + k g)`` and ``g_p_omegag = k / (s + k g)``,
    both normalized by the leading denominator coefficient.
    """
    if not k_static > 0 or not np.isfinite(k_static):
        raise InvalidParams("k_static must be positive and finite")
    n, d = g_wp.num, g_wp.den
    k_n = tuple(k_static * a for a in n)
    common = polyadd(polymul((0.0, 1.0), d), k_n)
    g_w = RationalTransferFunction(k_n, common).normalized()
    g_p = RationalTransferFunction(tuple(k_static * a for a in d), common).normalized()
    return g_w, g_p


@dataclass(frozen=True)
class FrequencySample:
    omega_p: float  # rad/s
    value: complex

    @property
    def hz(self) -> float:
        return self.omega_p / (2 * np.pi)


class FrequencyResponse:
    """Sampled response: strictly increasing ``omega`` (rad/s) with complex values."""

    __slots__ = ("omega", "values")

    def __init__(self, omega, values):
        omega = np.array(omega, dtype=float, ndmin=1)
        values = np.array(values, dtype=complex, ndmin=1)
        if omega.size == 0 or omega.shape != values.shape:
            raise InvalidParams("frequency response needs matching, nonempty arrays")
        if np.any(omega < 0) or np.any(np.diff(omega) <= 0):
            raise InvalidParams("omega must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidParams("frequency response values must be finite")
        omega.setflags(write=False)
        values.setflags(write=False)
        self.omega = omega
        self.values = values

    @classmethod
    def from_hz(cls, hz, values):
        return cls(2 * np.pi * np.asarray(hz, dtype=float), values)

    @property
    def hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    def __len__(self):
        return self.omega.size

    def __iter__(self):
        for w, v in zip(self.omega, self.values):
            yield FrequencySample(float(w), complex(v))

    def __repr__(self):
        return f"FrequencyResponse(n={len(self)}, {self.hz[0]:.4g}..{self.hz[-1]:.4g} Hz)"

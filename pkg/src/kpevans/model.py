"""Nonlinearity f, antiderivative F, and the effective potential V.

The wave equation u_t = u_xxx + f(u)_x is parametrized by a polynomial (or
power-law, which is a monomial) nonlinearity.  Profiles solve the nonlinear
oscillator u_x^2/2 = E - V(u; a, c) with

    V(u; a, c) = F(u) - a*u - (c/2)*u^2,   F' = f,  F(0) = 0.

Everything here is exact polynomial arithmetic: coefficients are stored in
ascending order and differentiated symbolically, so derivative checks
downstream carry no truncation error from this layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_MAX_ORDER = 3


def _poly_derivative(coeffs: np.ndarray, order: int) -> np.ndarray:
    """Ascending-order coefficients of the order-th derivative."""
    c = np.asarray(coeffs, dtype=float)
    for _ in range(order):
        if len(c) <= 1:
            return np.zeros(1)
        c = c[1:] * np.arange(1, len(c))
    return c


def _poly_antiderivative(coeffs: np.ndarray) -> np.ndarray:
    """Antiderivative with zero constant term."""
    c = np.asarray(coeffs, dtype=float)
    return np.concatenate(([0.0], c / np.arange(1, len(c) + 1)))


def polyval_ascending(coeffs: np.ndarray, u):
    """Horner evaluation of ascending-order coefficients."""
    result = 0.0 * np.asarray(u, dtype=float) if np.ndim(u) else 0.0
    for ck in coeffs[::-1]:
        result = result * u + ck
    return result


@dataclass(frozen=True)
class NonlinearitySpec:
    """Polynomial/power-law nonlinearity f with exact derivatives.

    kind is "power" (f = coef * u^exponent) or "poly"; in both cases the
    canonical representation is the ascending coefficient list of f itself.
    """

    kind: str
    coeffs: tuple = field(default=())
    coef: float = 0.0
    exponent: int = 0

    @staticmethod
    def power(coef: float, exponent: int) -> "NonlinearitySpec":
        if exponent < 1 or int(exponent) != exponent:
            raise ConfigError("power-law exponent must be a positive integer")
        c = [0.0] * exponent + [float(coef)]
        return NonlinearitySpec("power", tuple(c), float(coef), int(exponent))

    @staticmethod
    def polynomial(coeffs) -> "NonlinearitySpec":
        c = tuple(float(x) for x in coeffs)
        if not c:
            raise ConfigError("polynomial needs at least one coefficient")
        return NonlinearitySpec("poly", c)

    @staticmethod
    def kdv() -> "NonlinearitySpec":
        """f(u) = u^2/2, the KdV nonlinearity (u u_x in the flux)."""
        return NonlinearitySpec.power(0.5, 2)

    @staticmethod
    def mkdv() -> "NonlinearitySpec":
        """f(u) = u^3/3, the focusing mKdV nonlinearity (u^2 u_x)."""
        return NonlinearitySpec.power(1.0 / 3.0, 3)

    @property
    def f_coeffs(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    @property
    def F_coeffs(self) -> np.ndarray:
        """Antiderivative of f with F(0) = 0."""
        return _poly_antiderivative(self.f_coeffs)

    def to_json_dict(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "coef": self.coef, "exponent": self.exponent}
        return {"kind": "poly", "coeffs": list(self.coeffs)}

    @staticmethod
    def from_json_dict(d: dict) -> "NonlinearitySpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("nonlinearity must be an object with a 'kind'")
        kind = d["kind"]
        if kind == "power":
            extra = set(d) - {"kind", "coef", "exponent"}
            if extra:
                raise ConfigError(f"unknown nonlinearity keys: {sorted(extra)}")
            return NonlinearitySpec.power(d["coef"], d["exponent"])
        if kind == "poly":
            extra = set(d) - {"kind", "coeffs"}
            if extra:
                raise ConfigError(f"unknown nonlinearity keys: {sorted(extra)}")
            return NonlinearitySpec.polynomial(d["coeffs"])
        raise ConfigError(f"unknown nonlinearity kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def eval_f(spec: NonlinearitySpec, u, order: int = 0):
    """order-th derivative of f at u (exact for polynomials), order in 0..3."""
    if order not in range(_MAX_ORDER + 1):
        raise ValueError(f"unsupported derivative order {order}")
    return polyval_ascending(_poly_derivative(spec.f_coeffs, order), u)


@dataclass(frozen=True)
class WaveParams:
    """Integration constants (a, E) and speed c selecting a periodic orbit.

    sigma is the transverse dispersion sign carried along for the spectral
    problem; it does not affect the profile itself.
    """

    a: float
    E: float
    c: float
    nonlinearity: NonlinearitySpec
    sigma: int = 1

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"wave speed must be positive, got c={self.c}")
        if self.sigma not in (-1, 1):
            raise ConfigError(f"sigma must be +1 or -1, got {self.sigma}")

    def V_coeffs(self, order: int = 0) -> np.ndarray:
        """Ascending coefficients of the order-th derivative of V(.; a, c)."""
        V = self.F_minus_quadratic()
        return _poly_derivative(V, order)

    def F_minus_quadratic(self) -> np.ndarray:
        V = np.array(self.nonlinearity.F_coeffs, dtype=float)
        if len(V) < 3:
            V = np.concatenate([V, np.zeros(3 - len(V))])
        V[1] -= self.a
        V[2] -= self.c / 2.0
        return V

    def energy_poly(self) -> np.ndarray:
        """Ascending coefficients of p(u) = E - V(u; a, c)."""
        p = -self.F_minus_quadratic()
        p[0] += self.E
        return p


def eval_V(params: WaveParams, u, order: int = 0):
    """order-th u-derivative of the effective potential, order in 0..3.

    V' = f(u) - a - c*u and V'' = f'(u) - c, which is the identity tying the
    Hill operator L[u] = -d^2/dx^2 - f'(u) + c to -d^2/dx^2 - V''(u).
    """
    if order not in range(_MAX_ORDER + 1):
        raise ValueError(f"unsupported derivative order {order}")
    return polyval_ascending(params.V_coeffs(order), u)

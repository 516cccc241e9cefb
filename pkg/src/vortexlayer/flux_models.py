"""Nonlinear flux laws for the transported density.

Two built-in models:

* ``meanfield``: g(s) = |s|, the mean-field vortex density flux.  The
  derivative convention at the kink is g'(0) = 0.
* ``kellersegel``: g(s) = s (1 - s) inside [0, 1] and 0 outside, the
  logistic chemotaxis flux with a hard clip.  The derivative is 1 - 2 s
  inside [0, 1] and 0 outside.

Both have Lipschitz constant K = 1, which the upwinding and the boundary
Robin coefficient rely on.
"""
from __future__ import annotations

import numpy as np

MODEL_NAMES = ("meanfield", "kellersegel")


class FluxModel:
    """Flux law g with one-sided-safe derivative and Lipschitz bound K."""

    def __init__(self, name: str):
        if name not in MODEL_NAMES:
            raise ValueError(f"unknown flux model {name!r}, expected one of {MODEL_NAMES}")
        self.name = name

    @property
    def lipschitz(self) -> float:
        """K = sup |g'|.  Equals 1 for both built-in models."""
        return 1.0

    def g(self, s):
        s = np.asarray(s, dtype=float)
        if self.name == "meanfield":
            out = np.abs(s)
        else:
            out = np.where((s >= 0.0) & (s <= 1.0), s * (1.0 - s), 0.0)
        return out if out.ndim else float(out)

    def g_prime(self, s):
        s = np.asarray(s, dtype=float)
        if self.name == "meanfield":
            out = np.sign(s)
        else:
            out = np.where((s >= 0.0) & (s <= 1.0), 1.0 - 2.0 * s, 0.0)
        return out if out.ndim else float(out)

    def big_g2(self, s):
        """Integral of 2 g from 0 to s, used by the k=2 energy monitor."""
        s = np.asarray(s, dtype=float)
        if self.name == "meanfield":
            out = s * np.abs(s)
        else:
            sc = np.clip(s, 0.0, 1.0)
            out = sc * sc - (2.0 / 3.0) * sc**3
        return out if out.ndim else float(out)

    def __repr__(self) -> str:
        return f"FluxModel({self.name!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, FluxModel) and self.name == other.name

    def __hash__(self):
        return hash(self.name)


MEAN_FIELD = FluxModel("meanfield")
KELLER_SEGEL = FluxModel("kellersegel")


_SINGLETONS = {"meanfield": MEAN_FIELD, "kellersegel": KELLER_SEGEL}


def by_name(name: str) -> FluxModel:
    try:
        return _SINGLETONS[name]
    except KeyError:
        raise ValueError(f"unknown flux model {name!r}; expected one of {MODEL_NAMES}") from None


_KINDS = ("full", "plus", "minus")


class EntropyPair:
    """Convex entropy eta and matching flux q at a fixed level xi.

    kind = "full":  eta = |w - xi|,       q = sign(w - xi) (g(w) - g(xi))
    kind = "plus":  eta = max(w - xi, 0), q = 1_{w > xi}   (g(w) - g(xi))
    kind = "minus": eta = max(xi - w, 0), q = -1_{w < xi}  (g(w) - g(xi))

    All three satisfy eta >= 0, eta(xi) = 0 and |q| <= K eta.
    """

    def __init__(self, model: FluxModel, xi: float, kind: str = "full"):
        if kind not in _KINDS:
            raise ValueError(f"unknown entropy kind {kind!r}, expected one of {_KINDS}")
        self.model = model
        self.xi = float(xi)
        self.kind = kind

    def sign_factor(self, w):
        w = np.asarray(w, dtype=float)
        d = w - self.xi
        if self.kind == "full":
            out = np.sign(d)
        elif self.kind == "plus":
            out = np.where(d > 0.0, 1.0, 0.0)
        else:
            out = np.where(d < 0.0, -1.0, 0.0)
        return out if out.ndim else float(out)

    def eta(self, w):
        w = np.asarray(w, dtype=float)
        d = w - self.xi
        if self.kind == "full":
            out = np.abs(d)
        elif self.kind == "plus":
            out = np.maximum(d, 0.0)
        else:
            out = np.maximum(-d, 0.0)
        return out if out.ndim else float(out)

    def q(self, w):
        arr = np.asarray(w, dtype=float)
        out = np.asarray(self.sign_factor(arr)) * (
            np.asarray(self.model.g(arr)) - self.model.g(self.xi)
        )
        return out if out.ndim else float(out)

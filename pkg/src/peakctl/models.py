"""Planar control-affine models and the builtin examples.

A model is a pair of vector fields on the plane,

    dx/dt = f1(x, y) + g1(x, y) u
    dy/dt = f2(x, y) + g2(x, y) u,        u in [0, 1]

together with a domain declared positively invariant by the model author.
The Kolmogorov subclass writes the same fields through per-capita rates
phi_1..phi_4:

    dx/dt = -(phi1 - phi2 u) x,   dy/dt = (phi3 - phi4 u) y.

Fields are closed-form evaluators registered in code; there is no runtime
expression parser.  Parameters come in through a plain dict so a model can be
rebuilt from the JSON descriptor {"name": ..., "params": {...}}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import DomainError

ScalarField = Callable[[float, float], float]

#: tolerance band absorbing integrator overshoot at domain edges
DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle, optionally cut by an extra margin function.

    ``extra(x, y) >= 0`` must hold inside the domain (used for the SIR
    simplex constraint x + y <= 1).  Infinite bounds are allowed.
    """

    xmin: float = -math.inf
    xmax: float = math.inf
    ymin: float = -math.inf
    ymax: float = math.inf
    extra: Optional[ScalarField] = None

    def margin(self, x: float, y: float) -> float:
        """Signed distance-like margin: negative outside the domain."""
        m = min(x - self.xmin, self.xmax - x, y - self.ymin, self.ymax - y)
        if self.extra is not None:
            m = min(m, self.extra(x, y))
        return m

    def contains(self, x: float, y: float, tol: float = DOMAIN_TOL) -> bool:
        return self.margin(x, y) >= -tol


@dataclass(frozen=True)
class KolmogorovForm:
    """Per-capita rates of a planar Kolmogorov system."""

    phi1: ScalarField
    phi2: ScalarField
    phi3: ScalarField
    phi4: ScalarField


@dataclass(frozen=True)
class State:
    x: float
    y: float


@dataclass(frozen=True)
class PlanarModel:
    name: str
    f1: ScalarField
    f2: ScalarField
    g1: ScalarField
    g2: ScalarField
    domain: Domain
    params: dict = field(default_factory=dict)
    kolmogorov: Optional[KolmogorovForm] = None
    #: exact gradient of f2, (d/dx, d/dy); finite differences otherwise
    f2_grad: Optional[Callable[[float, float], tuple]] = None
    #: exact value of d/dy(f2/Delta) + d/dx(f1/Delta) where available
    flux_exact: Optional[ScalarField] = None

    def require_in_domain(self, s: State) -> None:
        if not self.domain.contains(s.x, s.y):
            raise DomainError(
                f"state ({s.x}, {s.y}) outside domain of model {self.name!r}"
            )

    def descriptor(self) -> dict:
        """JSON model descriptor, enough to rebuild via builtin()."""
        return {"name": self.name, "params": dict(self.params)}


def vector_field(model: PlanarModel, s: State, u: float) -> tuple:
    """Evaluate (dx/dt, dy/dt) at state ``s`` with control ``u`` in [0, 1]."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"control {u} outside [0, 1]")
    model.require_in_domain(s)
    x, y = s.x, s.y
    return (model.f1(x, y) + model.g1(x, y) * u,
            model.f2(x, y) + model.g2(x, y) * u)


def delta(model: PlanarModel, s: State) -> float:
    """f2*g1 - f1*g2 at ``s`` (negative on the f2 > 0 region for admissible
    models)."""
    model.require_in_domain(s)
    x, y = s.x, s.y
    return model.f2(x, y) * model.g1(x, y) - model.f1(x, y) * model.g2(x, y)


def kolmogorov_to_planar(k: KolmogorovForm, *, name: str = "kolmogorov",
                         domain: Optional[Domain] = None,
                         params: Optional[dict] = None) -> PlanarModel:
    """Expand per-capita rates into the direct planar fields."""
    if domain is None:
        domain = Domain(xmin=0.0, ymin=0.0)
    return PlanarModel(
        name=name,
        f1=lambda x, y: -k.phi1(x, y) * x,
        g1=lambda x, y: k.phi2(x, y) * x,
        f2=lambda x, y: k.phi3(x, y) * y,
        g2=lambda x, y: -k.phi4(x, y) * y,
        domain=domain,
        params=dict(params or {}),
        kolmogorov=k,
    )


def _require(params: dict, names: tuple, model: str) -> None:
    for n in names:
        if n not in params:
            raise ValueError(f"model {model!r} requires parameter {n!r}")
        if not params[n] > 0.0:
            raise ValueError(f"parameter {n!r} of model {model!r} must be positive")


def _example1() -> PlanarModel:
    # dx/dt = -(x+1)^2 y (1 - u),  dy/dt = x y - (x+1) y u,  on x > -1, y > 0
    return PlanarModel(
        name="example1",
        f1=lambda x, y: -(x + 1.0) ** 2 * y,
        g1=lambda x, y: (x + 1.0) ** 2 * y,
        f2=lambda x, y: x * y,
        g2=lambda x, y: -(x + 1.0) * y,
        domain=Domain(xmin=-1.0, ymin=0.0),
        f2_grad=lambda x, y: (y, x),
        flux_exact=lambda x, y: x / ((x + 1.0) ** 2 * y * y),
    )


def _sir(params: dict) -> PlanarModel:
    _require(params, ("beta", "alpha"), "sir")
    b, a = params["beta"], params["alpha"]
    k = KolmogorovForm(
        phi1=lambda x, y: b * y,
        phi2=lambda x, y: b * y,
        phi3=lambda x, y: b * x - a,
        phi4=lambda x, y: b * x,
    )
    m = kolmogorov_to_planar(
        k,
        name="sir",
        domain=Domain(xmin=0.0, ymin=0.0, extra=lambda x, y: 1.0 - x - y),
        params={"beta": b, "alpha": a},
    )
    return PlanarModel(
        **{**m.__dict__,
           "f2_grad": lambda x, y: (b * y, b * x - a),
           "flux_exact": lambda x, y: (b * x - a) / (a * b * x * y * y)},
    )


def _monod(params: dict) -> PlanarModel:
    params = {"Y": 1.0, "K": 1.0, **params}
    # m >= 1 is accepted on purpose: it fails the condition checks, which is
    # how an infeasible mortality rate is meant to be diagnosed.
    _require(params, ("m", "Y", "K"), "monod")
    m, Y, K = params["m"], params["Y"], params["K"]
    k = KolmogorovForm(
        phi1=lambda x, y: y / (Y * (K + x)),
        phi2=lambda x, y: y / (Y * (K + x)),
        phi3=lambda x, y: x / (K + x) - m,
        phi4=lambda x, y: x / (K + x),
    )
    pm = kolmogorov_to_planar(k, name="monod",
                              domain=Domain(xmin=0.0, ymin=0.0),
                              params={"m": m, "Y": Y, "K": K})
    return PlanarModel(
        **{**pm.__dict__,
           "f2_grad": lambda x, y: (K * y / (K + x) ** 2, x / (K + x) - m)},
    )


def _contois(params: dict) -> PlanarModel:
    params = {"Y": 1.0, **params}
    _require(params, ("m", "Y"), "contois")
    m, Y = params["m"], params["Y"]
    k = KolmogorovForm(
        phi1=lambda x, y: y / (Y * (x + y)),
        phi2=lambda x, y: y / (Y * (x + y)),
        phi3=lambda x, y: x / (x + y) - m,
        phi4=lambda x, y: x / (x + y),
    )
    pm = kolmogorov_to_planar(k, name="contois",
                              domain=Domain(xmin=0.0, ymin=0.0),
                              params={"m": m, "Y": Y})
    return PlanarModel(
        **{**pm.__dict__,
           "f2_grad": lambda x, y: (y * y / (x + y) ** 2,
                                    x / (x + y) - m - x * y / (x + y) ** 2)},
    )


_BUILTINS = {"example1", "sir", "monod", "contois"}


def builtin(name: str, params: Optional[dict] = None) -> PlanarModel:
    """Construct one of the builtin models from its parameter dict."""
    params = dict(params or {})
    if name == "example1":
        return _example1()
    if name == "sir":
        return _sir(params)
    if name == "monod":
        return _monod(params)
    if name == "contois":
        return _contois(params)
    raise ValueError(f"unknown model {name!r}; builtins: {sorted(_BUILTINS)}")


def from_descriptor(d: dict) -> PlanarModel:
    """Rebuild a builtin model from its JSON descriptor."""
    return builtin(d["name"], d.get("params"))

"""Mamdani fuzzy inference over linguistic variables.

The operator set is fixed: min for AND, max for OR, 1-x for NOT, min
(clipping) for implication, pointwise max for aggregation, and centroid
defuzzification over a uniformly sampled output domain.  Rule weights scale
the clip level: a consequent set is clipped at weight * firing_strength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import InvalidConfigError, InvalidDataError, MissingFeatureError

_MF_ARITY = {"tri": 3, "trap": 4, "gauss": 2, "zmf": 2, "smf": 2}


@dataclass(frozen=True)
class MembershipFunction:
    """One parametric membership function.

    kind: 'tri' (a, b, c), 'trap' (a, b, c, d), 'gauss' (center, width),
    'zmf' (a, b: 1 at a falling to 0 at b), 'smf' (a, b: 0 at a rising to 1).
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in _MF_ARITY:
            raise InvalidConfigError(
                f"unknown membership kind {self.kind!r}; expected one of {sorted(_MF_ARITY)}"
            )
        params = tuple(float(p) for p in self.params)
        if len(params) != _MF_ARITY[self.kind]:
            raise InvalidConfigError(
                f"{self.kind} takes {_MF_ARITY[self.kind]} parameters, got {len(params)}"
            )
        if not all(math.isfinite(p) for p in params):
            raise InvalidConfigError(f"membership parameters must be finite, got {params}")
        if self.kind == "tri":
            a, b, c = params
            if not (a <= b <= c) or a == c:
                raise InvalidConfigError(f"tri needs a <= b <= c with a < c, got {params}")
        elif self.kind == "trap":
            a, b, c, d = params
            if not (a <= b <= c <= d) or a == d:
                raise InvalidConfigError(f"trap needs a <= b <= c <= d with a < d, got {params}")
        elif self.kind == "gauss":
            if params[1] <= 0:
                raise InvalidConfigError(f"gauss width must be > 0, got {params[1]}")
        else:  # zmf / smf
            if not params[0] < params[1]:
                raise InvalidConfigError(f"{self.kind} needs a < b, got {params}")
        object.__setattr__(self, "params", params)


def triangular(a: float, b: float, c: float) -> MembershipFunction:
    return MembershipFunction("tri", (a, b, c))


def trapezoidal(a: float, b: float, c: float, d: float) -> MembershipFunction:
    return MembershipFunction("trap", (a, b, c, d))


def gaussian(center: float, width: float) -> MembershipFunction:
    return MembershipFunction("gauss", (center, width))


def z_shape(a: float, b: float) -> MembershipFunction:
    return MembershipFunction("zmf", (a, b))


def s_shape(a: float, b: float) -> MembershipFunction:
    return MembershipFunction("smf", (a, b))


def _smf_values(x: np.ndarray, a: float, b: float) -> np.ndarray:
    # Quadratic spline: 0 at a, 1 at b, knee at the midpoint.
    mid = (a + b) / 2.0
    span = b - a
    rising = 2.0 * ((x - a) / span) ** 2
    settling = 1.0 - 2.0 * ((x - b) / span) ** 2
    out = np.where(x <= mid, rising, settling)
    out = np.where(x <= a, 0.0, out)
    out = np.where(x >= b, 1.0, out)
    return out


def mf_eval(mf: MembershipFunction, x):
    """Membership degree of ``x`` (scalar or array); always within [0, 1]."""
    xs = np.asarray(x, dtype=float)
    if xs.size and not np.all(np.isfinite(xs)):
        raise InvalidDataError("membership evaluation needs finite inputs")
    if mf.kind == "tri":
        a, b, c = mf.params
        left = np.ones_like(xs) if b == a else (xs - a) / (b - a)
        right = np.ones_like(xs) if c == b else (c - xs) / (c - b)
        out = np.minimum(left, right)
        out = np.where((xs < a) | (xs > c), 0.0, out)
    elif mf.kind == "trap":
        a, b, c, d = mf.params
        left = np.ones_like(xs) if b == a else (xs - a) / (b - a)
        right = np.ones_like(xs) if d == c else (d - xs) / (d - c)
        out = np.minimum(np.minimum(left, 1.0), right)
        out = np.where((xs < a) | (xs > d), 0.0, out)
    elif mf.kind == "gauss":
        center, width = mf.params
        out = np.exp(-((xs - center) ** 2) / (2.0 * width * width))
    elif mf.kind == "zmf":
        out = 1.0 - _smf_values(xs, *mf.params)
    else:  # smf
        out = _smf_values(xs, *mf.params)
    out = np.clip(out, 0.0, 1.0)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LinguisticVariable:
    """A named variable with a bounded domain and named fuzzy sets."""

    name: str
    lo: float
    hi: float
    sets: dict[str, MembershipFunction]

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidConfigError("variable name must be non-empty")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise InvalidConfigError(
                f"variable {self.name!r} needs a finite domain with lo < hi, "
                f"got [{self.lo}, {self.hi}]"
            )
        if not self.sets:
            raise InvalidConfigError(f"variable {self.name!r} declares no fuzzy sets")


@dataclass(frozen=True)
class Atom:
    """Antecedent leaf: ``variable is [not] fuzzy_set``."""

    variable: str
    fuzzy_set: str
    negated: bool = False


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


Expr = Union[Atom, And, Or]


@dataclass(frozen=True)
class Rule:
    """IF antecedent THEN (variable is fuzzy_set), with an optional weight in (0, 1]."""

    antecedent: Expr
    consequent_var: str
    consequent_set: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.weight) or not 0.0 < self.weight <= 1.0:
            raise InvalidConfigError(f"rule weight must be in (0, 1], got {self.weight}")


def _atoms(expr: Expr):
    # Left-to-right so referenced-variable listings follow source order.
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            yield node
        else:
            stack.extend((node.right, node.left))


@dataclass(frozen=True)
class FisConfig:
    """A validated inference system: input variables, one output, and rules."""

    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[Rule, ...]
    resolution: int = 1001

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise InvalidConfigError("an inference system needs at least one rule")
        if not isinstance(self.resolution, int) or isinstance(self.resolution, bool):
            raise InvalidConfigError(f"resolution must be an integer, got {self.resolution!r}")
        if self.resolution < 2:
            raise InvalidConfigError(f"resolution must be >= 2, got {self.resolution}")
        names = [v.name for v in self.inputs]
        if len(set(names)) != len(names):
            raise InvalidConfigError(f"duplicate input variable names in {names}")
        if self.output.name in names:
            raise InvalidConfigError(
                f"output variable {self.output.name!r} also declared as an input"
            )
        by_name = {v.name: v for v in self.inputs}
        for rule in self.rules:
            for atom in _atoms(rule.antecedent):
                var = by_name.get(atom.variable)
                if var is None:
                    raise InvalidConfigError(
                        f"rule references unknown input variable {atom.variable!r}"
                    )
                if atom.fuzzy_set not in var.sets:
                    raise InvalidConfigError(
                        f"variable {atom.variable!r} has no set {atom.fuzzy_set!r}"
                    )
            if rule.consequent_var != self.output.name:
                raise InvalidConfigError(
                    f"rule concludes on {rule.consequent_var!r}, output is {self.output.name!r}"
                )
            if rule.consequent_set not in self.output.sets:
                raise InvalidConfigError(
                    f"output variable has no set {rule.consequent_set!r}"
                )

    def input_variables_referenced(self) -> tuple[str, ...]:
        """Names of input variables appearing in any rule antecedent, in rule order."""
        seen: dict[str, None] = {}
        for rule in self.rules:
            for atom in _atoms(rule.antecedent):
                seen.setdefault(atom.variable, None)
        return tuple(seen)


@dataclass(frozen=True)
class InferenceResult:
    """Defuzzified score plus diagnostics.

    degenerate is True when no rule produced any output mass; the score then
    falls back to the output domain midpoint.
    """

    score: float
    degenerate: bool
    firing_strengths: tuple[float, ...] = field(default=())


def _eval_expr(expr: Expr, variables: Mapping[str, LinguisticVariable], values) -> float:
    if isinstance(expr, Atom):
        var = variables[expr.variable]
        raw = values.get(expr.variable)
        if raw is None or not math.isfinite(float(raw)):
            raise MissingFeatureError(
                f"no finite value for input variable {expr.variable!r}"
            )
        x = min(max(float(raw), var.lo), var.hi)
        degree = mf_eval(var.sets[expr.fuzzy_set], x)
        return 1.0 - degree if expr.negated else degree
    if isinstance(expr, And):
        return min(_eval_expr(expr.left, variables, values), _eval_expr(expr.right, variables, values))
    if isinstance(expr, Or):
        return max(_eval_expr(expr.left, variables, values), _eval_expr(expr.right, variables, values))
    raise InvalidConfigError(f"unknown antecedent node {expr!r}")


def infer(fis: FisConfig, values: Mapping[str, float]) -> InferenceResult:
    """Run the five Mamdani stages for one record of input values.

    Input values are clamped to their variable domains.  Raises
    MissingFeatureError when a referenced input has no finite value.
    """
    variables = {v.name: v for v in fis.inputs}
    strengths = [
        rule.weight * _eval_expr(rule.antecedent, variables, values) for rule in fis.rules
    ]
    grid = np.linspace(fis.output.lo, fis.output.hi, fis.resolution)
    aggregate = np.zeros_like(grid)
    for rule, strength in zip(fis.rules, strengths):
        clipped = np.minimum(strength, mf_eval(fis.output.sets[rule.consequent_set], grid))
        np.maximum(aggregate, clipped, out=aggregate)
    mass = float(aggregate.sum())
    if mass <= 0.0:
        midpoint = (fis.output.lo + fis.output.hi) / 2.0
        return InferenceResult(score=midpoint, degenerate=True, firing_strengths=tuple(strengths))
    score = float((grid * aggregate).sum() / mass)
    return InferenceResult(score=score, degenerate=False, firing_strengths=tuple(strengths))

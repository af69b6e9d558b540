"""Takagi-Sugeno inference over triangular membership functions.

Everything here is immutable and side-effect free, so rule bases can be
shared across threads without locking.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

class FuzzyError(ValueError):
    """Invalid membership function, variable or rule base."""


class ZeroActivation(ArithmeticError):
    """No rule fired for the given input, so the weighted average is undefined."""


class TNorm(enum.Enum):
    PRODUCT = "product"
    MIN = "min"


@dataclass(frozen=True)
class TriangularMF:
    left: float
    peak: float
    right: float
    left_shoulder: bool = False
    right_shoulder: bool = False

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.left, self.peak, self.right)):
            raise FuzzyError(f"non-finite triangle {self}")
        if not (self.left <= self.peak <= self.right):
            raise FuzzyError(f"need left <= peak <= right, got {self}")
        if self.left == self.right:
            raise FuzzyError(f"degenerate triangle with left == right: {self}")

    def __call__(self, x: float, period: Optional[float] = None) -> float:
        return membership(self, x, period)


def membership(mf: TriangularMF, x: float, period: Optional[float] = None) -> float:
    """Degree of `x` in `mf`.

    With `period` set, `x` is first reduced into the period starting at the
    left foot, so e.g. hour 24.0 and hour 0.0 are the same point.  Supports
    may be lopsided around the peak but never wider than one period.
    """
    if period is not None:
        x = mf.left + (x - mf.left) % period
    if x == mf.peak:
        return 1.0
    if x < mf.peak:
        if mf.left_shoulder:
            return 1.0
        if x <= mf.left:
            return 0.0
        return (x - mf.left) / (mf.peak - mf.left)
    if mf.right_shoulder:
        return 1.0
    if x >= mf.right:
        return 0.0
    return (mf.right - x) / (mf.right - mf.peak)


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    domain_min: float
    domain_max: float
    terms: tuple[tuple[str, TriangularMF], ...]
    circular: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((str(n), mf) for n, mf in self.terms))
        if not self.domain_min < self.domain_max:
            raise FuzzyError(f"{self.name}: empty domain [{self.domain_min}, {self.domain_max}]")
        if not self.terms:
            raise FuzzyError(f"{self.name}: no terms")
        names = [n for n, _ in self.terms]
        if len(set(names)) != len(names):
            raise FuzzyError(f"{self.name}: duplicate term names {names}")
        peaks = self.peaks
        if any(b <= a for a, b in zip(peaks, peaks[1:])):
            raise FuzzyError(f"{self.name}: term peaks must be strictly increasing, got {peaks}")
        if self.circular:
            if peaks[0] < self.domain_min or peaks[-1] >= self.domain_max:
                raise FuzzyError(f"{self.name}: peaks must lie in [{self.domain_min}, {self.domain_max})")
        elif peaks[0] < self.domain_min or peaks[-1] > self.domain_max:
            raise FuzzyError(f"{self.name}: peaks must lie in [{self.domain_min}, {self.domain_max}]")

    @classmethod
    def ruspini(cls, name: str, term_names: Sequence[str], peaks: Sequence[float],
                domain_min: float, domain_max: float, circular: bool = False) -> "LinguisticVariable":
        """Build terms whose feet sit on the neighbouring peaks.

        Non-circular variables get shoulders on the two extreme terms; circular
        ones wrap the first and last terms around the period instead.
        """
        peaks = [float(p) for p in peaks]
        if len(peaks) != len(term_names):
            raise FuzzyError("one peak per term name required")
        if len(peaks) < 2:
            raise FuzzyError("a ruspini layout needs at least two terms")
        period = domain_max - domain_min
        terms = []
        for i, (tname, p) in enumerate(zip(term_names, peaks)):
            first, last = i == 0, i == len(peaks) - 1
            if circular:
                left = peaks[-1] - period if first else peaks[i - 1]
                right = peaks[0] + period if last else peaks[i + 1]
                mf = TriangularMF(left, p, right)
            else:
                left = p if first else peaks[i - 1]
                right = p if last else peaks[i + 1]
                mf = TriangularMF(left, p, right, left_shoulder=first, right_shoulder=last)
            terms.append((tname, mf))
        return cls(name, float(domain_min), float(domain_max), tuple(terms), circular)

    @property
    def term_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.terms)

    @property
    def peaks(self) -> tuple[float, ...]:
        return tuple(mf.peak for _, mf in self.terms)

    @property
    def period(self) -> float:
        return self.domain_max - self.domain_min

    def term_index(self, term: str) -> int:
        try:
            return self.term_names.index(term)
        except ValueError:
            raise FuzzyError(f"{self.name}: unknown term {term!r}") from None

    def prepare(self, x: float) -> float:
        """Wrap circular inputs into the domain, clamp everything else."""
        x = float(x)
        if not math.isfinite(x):
            raise FuzzyError(f"{self.name}: non-finite input {x}")
        if self.circular:
            return self.domain_min + (x - self.domain_min) % self.period
        return min(max(x, self.domain_min), self.domain_max)

    def memberships(self, x: float) -> tuple[float, ...]:
        x = self.prepare(x)
        period = self.period if self.circular else None
        return tuple(membership(mf, x, period) for _, mf in self.terms)

    def is_ruspini(self) -> bool:
        """True when the terms follow the neighbour-peak layout exactly."""
        try:
            expected = LinguisticVariable.ruspini(
                self.name, self.term_names, self.peaks, self.domain_min, self.domain_max, self.circular
            )
        except FuzzyError:
            return False
        return expected.terms == self.terms


@dataclass(frozen=True)
class TSRule:
    """One implication: a term index per input variable and a linear consequent.

    `antecedent[p]` indexes into `variables[p].terms`; `consequent` holds
    a_0..a_n, or just a_0 for a constant output.
    """

    antecedent: tuple[int, ...]
    consequent: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(int(i) for i in self.antecedent))
        object.__setattr__(self, "consequent", tuple(float(c) for c in self.consequent))


@dataclass(frozen=True)
class InferenceResult:
    weights: tuple[float, ...]
    rule_outputs: tuple[float, ...]
    output: float


def combine(degrees: Sequence[float], tnorm: TNorm = TNorm.PRODUCT) -> float:
    if tnorm is TNorm.MIN:
        return min(degrees)
    w = 1.0
    for d in degrees:
        w *= d
    return w


def firing_strength(rule: TSRule, inputs: Sequence[float],
                    variables: Sequence[LinguisticVariable], tnorm: TNorm = TNorm.PRODUCT) -> float:
    if len(inputs) != len(variables) or len(rule.antecedent) != len(variables):
        raise FuzzyError(
            f"arity mismatch: {len(inputs)} inputs, {len(variables)} variables, "
            f"{len(rule.antecedent)} antecedent terms"
        )
    degrees = []
    for var, term, x in zip(variables, rule.antecedent, inputs):
        mf = var.terms[term][1]
        degrees.append(membership(mf, var.prepare(x), var.period if var.circular else None))
    return combine(degrees, tnorm)


def rule_output(rule: TSRule, inputs: Sequence[float]) -> float:
    coeffs = rule.consequent
    if len(coeffs) == 1:
        return coeffs[0]
    if len(coeffs) != len(inputs) + 1:
        raise FuzzyError(f"expected {len(inputs) + 1} consequent coefficients, got {len(coeffs)}")
    return coeffs[0] + sum(a * x for a, x in zip(coeffs[1:], inputs))


@dataclass(frozen=True)
class RuleBase:
    variables: tuple[LinguisticVariable, ...]
    rules: tuple[TSRule, ...]
    tnorm: TNorm = TNorm.PRODUCT

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rules", tuple(self.rules))
        n = len(self.variables)
        seen = {}
        for k, rule in enumerate(self.rules):
            if len(rule.antecedent) != n:
                raise FuzzyError(f"rule {k}: {len(rule.antecedent)} antecedent terms for {n} variables")
            for var, t in zip(self.variables, rule.antecedent):
                if not 0 <= t < len(var.terms):
                    raise FuzzyError(f"rule {k}: term index {t} out of range for {var.name}")
            if len(rule.consequent) not in (1, n + 1):
                raise FuzzyError(f"rule {k}: consequent needs 1 or {n + 1} coefficients")
            if rule.antecedent in seen:
                raise FuzzyError(
                    f"duplicate rule for {self.describe_cell(rule.antecedent)} (rules {seen[rule.antecedent]} and {k})"
                )
            seen[rule.antecedent] = k
        missing = [cell for cell in itertools.product(*(range(len(v.terms)) for v in self.variables))
                   if cell not in seen]
        if missing:
            raise FuzzyError(
                "incomplete rule grid, missing " + ", ".join(self.describe_cell(c) for c in missing)
            )

    def describe_cell(self, cell: Sequence[int]) -> str:
        return "(" + ", ".join(v.terms[t][0] for v, t in zip(self.variables, cell)) + ")"

    def rule_for(self, *terms: str) -> TSRule:
        cell = tuple(v.term_index(t) for v, t in zip(self.variables, terms))
        for rule in self.rules:
            if rule.antecedent == cell:
                return rule
        raise KeyError(terms)

    def with_variable(self, index: int, variable: LinguisticVariable) -> "RuleBase":
        if variable.term_names != self.variables[index].term_names:
            raise FuzzyError("replacement variable must keep the same terms")
        variables = list(self.variables)
        variables[index] = variable
        return RuleBase(tuple(variables), self.rules, self.tnorm)


def evaluate(rb: RuleBase, inputs: Sequence[float]) -> InferenceResult:
    """Weighted average of the rule outputs, weighted by firing strength."""
    if len(inputs) != len(rb.variables):
        raise FuzzyError(f"expected {len(rb.variables)} inputs, got {len(inputs)}")
    xs = [v.prepare(x) for v, x in zip(rb.variables, inputs)]
    degrees = [v.memberships(x) for v, x in zip(rb.variables, xs)]
    use_min = rb.tnorm is TNorm.MIN
    weights = []
    outputs = []
    num = den = 0.0
    for rule in rb.rules:
        ante = rule.antecedent
        w = degrees[0][ante[0]]
        for p in range(1, len(ante)):
            d = degrees[p][ante[p]]
            w = min(w, d) if use_min else w * d
        y = rule_output(rule, xs)
        weights.append(w)
        outputs.append(y)
        if w > 0.0:
            num += w * y
            den += w
    if den <= 0.0:
        raise ZeroActivation(f"no rule fired for inputs {list(inputs)}")
    return InferenceResult(tuple(weights), tuple(outputs), num / den)

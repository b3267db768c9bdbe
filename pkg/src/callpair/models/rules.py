"""Hand-written routing rules.

Text format, one rule per line; a call is routed to SERVICE_A when any line
matches::

    # comment
    prior_service_a_calls_3m >= 1
    age_norm < 0.3 AND user_type_company == 1
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass

import numpy as np

from ..domain import ConfigError

OPS = {
    ">=": operator.ge,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
    ">": operator.gt,
    "<": operator.lt,
}

_CLAUSE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(>=|<=|==|!=|>|<)\s*([-+0-9.eE]+)\s*$")


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    value: float

    def __str__(self):
        return f"{self.feature} {self.op} {self.value:g}"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple  # tuple of tuples of Condition; inner tuples are conjunctions

    @classmethod
    def parse(cls, text: str) -> "RuleSet":
        rules = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            clauses = []
            for part in re.split(r"\s+AND\s+", line):
                m = _CLAUSE.match(part)
                if not m:
                    raise ConfigError(f"rule line {lineno}: cannot parse {part.strip()!r}")
                try:
                    value = float(m.group(3))
                except ValueError as exc:
                    raise ConfigError(f"rule line {lineno}: bad constant {m.group(3)!r}") from exc
                clauses.append(Condition(m.group(1), m.group(2), value))
            rules.append(tuple(clauses))
        if not rules:
            raise ConfigError("rule set is empty")
        return cls(rules=tuple(rules))

    def features(self) -> set:
        return {c.feature for rule in self.rules for c in rule}

    def validate(self, feature_names) -> None:
        missing = self.features() - set(feature_names)
        if missing:
            raise ConfigError(f"rules reference unknown features: {sorted(missing)}")

    def fires(self, X: np.ndarray, feature_names) -> np.ndarray:
        col = {name: i for i, name in enumerate(feature_names)}
        out = np.zeros(X.shape[0], dtype=bool)
        for rule in self.rules:
            hit = np.ones(X.shape[0], dtype=bool)
            for c in rule:
                hit &= OPS[c.op](X[:, col[c.feature]], c.value)
            out |= hit
        return out

    def to_text(self) -> str:
        return "\n".join(" AND ".join(str(c) for c in rule) for rule in self.rules) + "\n"


@dataclass
class RulesState:
    ruleset: RuleSet
    feature_names: list

    def proba(self, X):
        return self.ruleset.fires(X, self.feature_names).astype(np.float64)

    def to_dict(self):
        return {"rules": self.ruleset.to_text()}

    @classmethod
    def from_dict(cls, d, feature_names):
        return cls(ruleset=RuleSet.parse(d["rules"]), feature_names=list(feature_names))

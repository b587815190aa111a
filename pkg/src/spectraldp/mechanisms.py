"""Privacy primitives: Gaussian / Laplace / log-sensitivity mechanisms,
seeded counter-based randomness, and a budget ledger implementing
composition with halting.

Ledger semantics: a stage records (epsilon_i, delta_i, p_i) where p_i is the
failure mass of that stage's good-output event. Composition charges
(sum eps_i, sum delta_i + sum p_i): the failure mass of a stage whose good
output gates a later stage's privacy is paid in delta.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "SeededRng",
    "PrivacyParams",
    "BudgetStage",
    "BudgetLedger",
    "ledger_compose",
    "noise_scale_of",
    "gaussian_mechanism",
    "laplace_mechanism",
    "log_sensitivity_mechanism",
]


def _label_key(label) -> int:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class SeededRng:
    """Counter-based random stream (Philox) addressed by (seed, path).

    `child(label)` derives an independent stream deterministically, so
    parallel trials and pipeline stages replay bit-exactly.

    `noise_off` silences only the *privacy* noise draws (`noise_normal`,
    `noise_laplace`); algorithmic randomness (rounding, random subspaces)
    stays live. Setting it breaks every privacy guarantee and exists for
    tests and noise-free determinism checks only.
    """

    def __init__(self, seed: int, path: tuple = (), noise_off: bool = False):
        self.seed = int(seed)
        self.path = tuple(path)
        self.noise_off = bool(noise_off)
        self._gen = None

    def child(self, label) -> "SeededRng":
        return SeededRng(self.seed, self.path + (_label_key(label),), self.noise_off)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen

    # -- privacy noise (subject to the noise_off hook) --

    def noise_normal(self, scale: float, size=None):
        if self.noise_off or scale == 0.0:
            return np.zeros(size) if size is not None else 0.0
        return self.generator.normal(0.0, scale, size=size)

    def noise_laplace(self, scale: float, size=None):
        if self.noise_off or scale == 0.0:
            return np.zeros(size) if size is not None else 0.0
        return self.generator.laplace(0.0, scale, size=size)

    # -- algorithmic randomness (always live) --

    def normal(self, size=None):
        return self.generator.normal(size=size)

    def uniform(self, size=None):
        return self.generator.uniform(size=size)

    def choice_from_weights(self, weights: np.ndarray) -> int:
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise InputError("weights must have positive mass")
        u = self.generator.uniform() * total
        return int(np.searchsorted(np.cumsum(w), u, side="right").clip(0, len(w) - 1))


@dataclass(frozen=True)
class PrivacyParams:
    """(epsilon, delta) privacy budget plus the per-stage failure probability
    p_fail that feeds the halting composition."""

    epsilon: float
    delta: float
    p_fail: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if not 0 < self.delta <= 1:
            raise InputError("delta must lie in (0, 1]")
        if not 0 < self.p_fail < 1:
            raise InputError("p_fail must lie in (0, 1)")

    def scaled(self, f: float) -> "PrivacyParams":
        return PrivacyParams(self.epsilon * f, self.delta * f, self.p_fail * f)


@dataclass(frozen=True)
class BudgetStage:
    name: str
    epsilon: float
    delta: float
    p_fail: float = 0.0


@dataclass
class BudgetLedger:
    """Ordered record of per-stage budget consumption."""

    stages: list = field(default_factory=list)

    def add(self, name: str, epsilon: float, delta: float, p_fail: float = 0.0):
        self.stages.append(BudgetStage(name, float(epsilon), float(delta), float(p_fail)))

    def add_params(self, name: str, params: PrivacyParams):
        self.add(name, params.epsilon, params.delta, params.p_fail)

    def extend(self, other: "BudgetLedger", prefix: str = ""):
        for st in other.stages:
            self.stages.append(BudgetStage(prefix + st.name, st.epsilon, st.delta, st.p_fail))

    @property
    def total_epsilon(self) -> float:
        return float(sum(st.epsilon for st in self.stages))

    @property
    def total_delta(self) -> float:
        return float(sum(st.delta + st.p_fail for st in self.stages))

    def compose(self) -> tuple[float, float]:
        return self.total_epsilon, self.total_delta

    def as_dicts(self) -> list[dict]:
        return [
            {"stage": st.name, "epsilon": st.epsilon, "delta": st.delta, "p_fail": st.p_fail}
            for st in self.stages
        ]


def ledger_compose(ledger: BudgetLedger) -> tuple[float, float]:
    """Totals under two-step composition with halting: every stage's failure
    mass joins the delta total."""
    return ledger.compose()


def noise_scale_of(params: PrivacyParams, l2_sensitivity: float) -> float:
    """Per-coordinate std of the Gaussian mechanism: Delta * sqrt(log(2/delta)) / eps."""
    if l2_sensitivity < 0:
        raise InputError("sensitivity must be non-negative")
    return l2_sensitivity * math.sqrt(math.log(2.0 / params.delta)) / params.epsilon


def gaussian_mechanism(value, l2_sensitivity: float, params: PrivacyParams,
                       rng: SeededRng, ledger: BudgetLedger | None = None,
                       stage: str = "gaussian"):
    """value + N(0, Delta^2 log(2/delta) / eps^2) per coordinate.

    Valid for 0 < eps, delta <= 1; the mechanism is (eps, delta)-DP for any
    function with l2 sensitivity at most Delta.
    """
    if not 0 < params.epsilon <= 1:
        raise InputError("gaussian mechanism requires 0 < epsilon <= 1")
    scale = noise_scale_of(params, l2_sensitivity)
    value = np.asarray(value, dtype=float)
    out = value + rng.noise_normal(scale, size=value.shape if value.ndim else None)
    if ledger is not None:
        ledger.add(stage, params.epsilon, params.delta, 0.0)
    return out


def laplace_mechanism(value, l1_sensitivity: float, epsilon: float,
                      rng: SeededRng, ledger: BudgetLedger | None = None,
                      stage: str = "laplace"):
    """value + Lap(Delta_1 / eps) per coordinate; (eps, 0)-DP."""
    if l1_sensitivity < 0:
        raise InputError("sensitivity must be non-negative")
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    scale = l1_sensitivity / epsilon
    value = np.asarray(value, dtype=float)
    out = value + rng.noise_laplace(scale, size=value.shape if value.ndim else None)
    if ledger is not None:
        ledger.add(stage, epsilon, 0.0, 0.0)
    return out


def log_sensitivity_mechanism(value: float, ratio_bound_a: float, epsilon: float,
                              rng: SeededRng, ledger: BudgetLedger | None = None,
                              stage: str = "log-laplace") -> float:
    """Laplace mechanism on log(value) for multiplicatively-stable functions.

    If f(M)/f(M') in [1/a, a] on adjacent inputs, releasing
    exp(log f + Lap(log(a)/eps)) is (eps, 0)-DP, and with probability 1 - p
    the multiplicative error is at most a**(log(1/p)/eps).
    """
    if value <= 0:
        raise InputError("log-sensitivity mechanism needs a positive value")
    if ratio_bound_a < 1:
        raise InputError("ratio bound a must be at least 1")
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    scale = math.log(ratio_bound_a) / epsilon
    out = math.exp(math.log(value) + float(rng.noise_laplace(scale)))
    if ledger is not None:
        ledger.add(stage, epsilon, 0.0, 0.0)
    return out

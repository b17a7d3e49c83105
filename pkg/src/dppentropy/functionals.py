"""Scalar functionals of a concentration-operator spectrum.

Entropy, number variance, expected count and the traces of
``h_p(x) = x^p (1 - x)^p``.  Every function accepts a :class:`Spectrum` or a
plain sequence of eigenvalues in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import QuadratureRule
from .kernels import KernelSpec
from .spectral import Spectrum

__all__ = [
    "FunctionalReport",
    "ENTROPY_VARIANCE_CONSTANT",
    "binary_entropy",
    "entropy",
    "variance_spectral",
    "variance_direct",
    "expected_count",
    "schatten_h_trace",
    "report",
]

# f(x) >= 4 ln2 x(1-x), tight at x = 1/2
ENTROPY_VARIANCE_CONSTANT = 4.0 * math.log(2.0)
CUTOFF = 1e-14


def _lambdas(s) -> np.ndarray:
    if isinstance(s, Spectrum):
        return s.significant(CUTOFF)
    lam = np.asarray(s, dtype=float).ravel()
    return lam[lam > CUTOFF]


def binary_entropy(x):
    """f(x) = -x ln x - (1-x) ln(1-x), with f(0) = f(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("binary_entropy is defined on [0, 1]; clamp first")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(arr > 0, arr * np.log(arr), 0.0) - np.where(
            arr < 1, (1 - arr) * np.log1p(-arr), 0.0
        )
    return out if out.ndim else float(out)


def entropy(s) -> float:
    lam = _lambdas(s)
    return float(np.sum(binary_entropy(lam[lam < 1.0])))


def variance_spectral(s) -> float:
    return schatten_h_trace(s, 1.0)


def expected_count(s) -> float:
    return float(np.sum(_lambdas(s)))


def schatten_h_trace(s, p: float) -> float:
    """Sum of lambda^p (1 - lambda)^p, with h_p(0) = h_p(1) = 0."""
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p}")
    lam = _lambdas(s)
    lam = lam[lam < 1.0]
    if p == 1:
        return float(np.sum(lam * (1.0 - lam)))
    return float(np.sum((lam * (1.0 - lam)) ** p))


def variance_direct(spec: KernelSpec, rule: QuadratureRule, *, block: int = 512) -> float:
    """int_Omega K(z,z) dz - int int_Omega^2 |K(z,w)|^2 dz dw on the rule's nodes."""
    z = rule.z
    w = rule.weights
    diag = float(np.dot(w, np.real(spec(z, z))))
    double = 0.0
    for s in range(0, z.size, block):
        k = spec(z[s : s + block, None], z[None, :])
        double += float(w[s : s + block] @ (np.abs(k) ** 2) @ w)
    return diag - double


@dataclass(frozen=True)
class FunctionalReport:
    expected_count: float
    variance: float
    entropy: float
    schatten: dict = field(default_factory=dict)

    @property
    def ratio_entropy_variance(self) -> float:
        return self.entropy / self.variance if self.variance > 0 else math.nan

    def violations(self, slack: float = 1e-12) -> list[str]:
        """Invariants that fail on this report (empty when all hold)."""
        bad = []
        if self.variance < -slack:
            bad.append(f"negative variance {self.variance}")
        if self.entropy < ENTROPY_VARIANCE_CONSTANT * self.variance - slack * max(1.0, self.entropy):
            bad.append(f"entropy {self.entropy} below 4 ln2 * variance {self.variance}")
        if self.expected_count < self.variance - slack:
            bad.append("expected count below variance")
        if 1.0 in self.schatten and abs(self.schatten[1.0] - self.variance) > slack * max(1.0, self.variance):
            bad.append("schatten[1] differs from variance")
        return bad


def report(s, ps=(0.5, 1.0)) -> FunctionalReport:
    return FunctionalReport(
        expected_count=expected_count(s),
        variance=variance_spectral(s),
        entropy=entropy(s),
        schatten={float(p): schatten_h_trace(s, p) for p in ps},
    )

"""Finite Weyl-Heisenberg ensemble built from the leading eigenfunctions.

The projection kernel ``sum_{n <= N} e_n(z) conj(e_n(w))`` with ``N =
ceil(|Omega|)`` uses Nystrom-extended eigenfunctions normalized in L2 of the
whole plane, so that ``int_Omega |e_n|^2 = lambda_n``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Domain, QuadratureRule, Rectangle, quadrature
from .kernels import KernelSpec, _phase, as_complex
from .spectral import Spectrum, assemble, eigh
from .functionals import variance_spectral

__all__ = [
    "EnsembleError",
    "FiniteEnsemble",
    "PointConfiguration",
    "CountStats",
    "truncation_rank",
    "build_finite",
    "finite_ginibre_kernel",
    "intensity_finite",
    "enclosing_box",
    "l1_deviation",
    "l1_identity",
    "theorem43_gap",
    "sample",
    "sample_many",
    "empirical_count_stats",
    "write_points_csv",
    "write_stats_csv",
]

MIN_LAMBDA = 1e-6
BOX_FACTOR = 3.0
BOX_PAD = 4.0


class EnsembleError(RuntimeError):
    pass


def truncation_rank(d: Domain) -> int:
    """Smallest integer >= area; areas within 1e-9 of an integer round to it."""
    area = d.area
    return max(1, math.ceil(area - 1e-9 * max(1.0, area)))


@dataclass(frozen=True, eq=False)
class FiniteEnsemble:
    spec: KernelSpec
    domain: Domain
    rule: QuadratureRule
    spectrum: Spectrum
    vectors: np.ndarray  # leading discrete eigenvectors, one column each
    coeffs: np.ndarray  # extension coefficients sqrt(w_j) phi_n[j] / sqrt(lambda_n)

    @property
    def rank(self) -> int:
        return self.coeffs.shape[1]

    @property
    def lambdas(self) -> np.ndarray:
        return self.spectrum.lambdas[: self.rank]

    @property
    def variance(self) -> float:
        return variance_spectral(self.spectrum)

    @property
    def trace(self) -> float:
        return float(np.sum(self.spectrum.lambdas))

    def eigenfunctions(self, z, *, block: int = 2048) -> np.ndarray:
        """Values e_n(z) for each point; shape ``(len(z), rank)``."""
        z = np.atleast_1d(as_complex(z)).ravel()
        nodes = self.rule.z
        out = np.empty((z.size, self.rank), dtype=complex)
        for s in range(0, z.size, block):
            out[s : s + block] = self.spec(z[s : s + block, None], nodes[None, :]) @ self.coeffs
        return out

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors


def build_finite(spec: KernelSpec, d: Domain, rule: QuadratureRule | None = None, order: int = 24) -> FiniteEnsemble:
    if rule is None:
        rule = quadrature(d, order)
    N = truncation_rank(d)
    if len(rule) < 3 * N:
        raise EnsembleError(f"rule has {len(rule)} nodes; need at least {3 * N} for rank {N}")
    spectrum, vecs = eigh(assemble(spec, rule))
    spectrum.check()
    lam = spectrum.raw_lambdas[:N]
    if lam[-1] < MIN_LAMBDA:
        raise EnsembleError(
            f"lambda_{N} = {lam[-1]:.2e} is too small for a stable extension; increase the order"
        )
    vecs = vecs[:, :N]
    coeffs = np.sqrt(rule.weights)[:, None] * vecs / np.sqrt(lam)[None, :]
    return FiniteEnsemble(spec, d, rule, spectrum, vecs, coeffs)


def finite_ginibre_kernel(N: int, z, w):
    """Truncated Ginibre kernel: exponential series of pi z conj(w) cut at N terms."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    z = as_complex(z)
    w = as_complex(w)
    a = math.pi * z * np.conj(w)
    term = np.ones_like(a)
    total = np.ones_like(a)
    for k in range(1, N):
        term = term * a / k
        total = total + term
    pref = np.exp(-0.5 * math.pi * (np.abs(z) ** 2 + np.abs(w) ** 2) + 1j * _phase(z, w))
    return pref * total


def intensity_finite(fe: FiniteEnsemble, z):
    vals = np.sum(np.abs(fe.eigenfunctions(z)) ** 2, axis=1)
    return float(vals[0]) if np.isscalar(z) or isinstance(z, tuple) else vals


def enclosing_box(d: Domain, factor: float = BOX_FACTOR, pad: float = BOX_PAD) -> Rectangle:
    """Bounding box dilated by ``factor`` about the centroid, with at least ``pad`` margin."""
    x0, y0, x1, y1 = d.bounding_box()
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    hw = max(factor * 0.5 * (x1 - x0), 0.5 * (x1 - x0) + pad)
    hh = max(factor * 0.5 * (y1 - y0), 0.5 * (y1 - y0) + pad)
    return Rectangle.centered(2 * hw, 2 * hh, (cx, cy))


def _box_tail(fe: FiniteEnsemble, box: Rectangle, samples: int = 64) -> float:
    x0, y0, x1, y1 = box.bounding_box()
    t = np.linspace(0.0, 1.0, samples)
    edge = np.concatenate(
        [x0 + (x1 - x0) * t + 1j * y0, x0 + (x1 - x0) * t + 1j * y1, x0 + 1j * (y0 + (y1 - y0) * t), x1 + 1j * (y0 + (y1 - y0) * t)]
    )
    return float(intensity_finite(fe, edge).max() * box.perimeter)


def l1_deviation(
    fe: FiniteEnsemble,
    quad_box: QuadratureRule | None = None,
    *,
    box_order: int = 80,
    tail_rtol: float = 1e-4,
) -> float:
    """int |rho_1(z) - 1_Omega(z)| dz over the plane.

    Inside the domain the integrand is evaluated pointwise on the domain's
    own rule; outside it equals rho_1, integrated over the enclosing box
    minus the domain part.
    """
    if quad_box is None:
        quad_box = quadrature(enclosing_box(fe.domain), box_order)
    box = quad_box.target
    tail = _box_tail(fe, box)
    if tail > tail_rtol * fe.rank:
        raise EnsembleError(f"intensity tail {tail:.2e} at the box edge is too large; use a bigger box")
    inner = intensity_finite(fe, fe.rule.z)
    inside = float(np.dot(fe.rule.weights, np.abs(inner - 1.0)))
    outside = quad_box.integrate(intensity_finite(fe, quad_box.z)) - float(np.dot(fe.rule.weights, inner))
    return inside + outside


def l1_identity(fe: FiniteEnsemble) -> float:
    """(N - sum_{n<=N} lambda_n) + (trace - sum_{n<=N} lambda_n)."""
    head = float(np.sum(fe.lambdas))
    return (fe.rank - head) + (fe.trace - head)


def theorem43_gap(fe: FiniteEnsemble) -> float:
    """N - sum of the leading N eigenvalues; the number variance is at most twice this."""
    return fe.rank - float(np.sum(fe.lambdas))


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    points: np.ndarray
    seed: int
    index: int = 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def count_in(self, d: Domain) -> int:
        return int(np.count_nonzero(d.contains(self.points[:, 0], self.points[:, 1])))


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample(
    fe: FiniteEnsemble,
    seed: int,
    index: int = 0,
    *,
    box_factor: float = BOX_FACTOR,
    batch: int = 64,
    envelope: float = 1.05,
    min_acceptance: float = 1e-4,
) -> PointConfiguration:
    """Draw one realization of the projection process.

    Points are chosen sequentially; step k draws from the conditional density
    ``|P_k u(z)|^2 / (N - k)`` where ``u(z) = conj(e(z))`` and ``P_k``
    projects away from the span of the vectors at the points already chosen.
    Proposals are uniform on the enlarged bounding box and accepted against
    the envelope ``rho_1 <= 1``.
    """
    rng = _rng(seed, index)
    box = enclosing_box(fe.domain, box_factor, pad=0.0)
    x0, y0, x1, y1 = box.bounding_box()
    N = fe.rank
    basis = np.zeros((0, N), dtype=complex)
    points = []
    proposals = accepted = 0
    while len(points) < N:
        z = rng.uniform(x0, x1, batch) + 1j * rng.uniform(y0, y1, batch)
        u = np.conj(fe.eigenfunctions(z))
        if basis.shape[0]:
            u = u - (u @ basis.conj().T) @ basis
        dens = np.sum(np.abs(u) ** 2, axis=1)
        if dens.max() > envelope:
            raise EnsembleError(f"conditional density {dens.max():.3f} exceeds the envelope")
        hit = np.nonzero(rng.uniform(0.0, envelope, batch) < dens)[0]
        if hit.size == 0:
            proposals += batch
            if proposals > 10.0 / min_acceptance and accepted / proposals < min_acceptance:
                raise EnsembleError(f"rejection sampler stalled (acceptance {accepted / proposals:.1e})")
            continue
        k = hit[0]
        proposals += k + 1
        accepted += 1
        points.append((z[k].real, z[k].imag))
        v = u[k] / math.sqrt(dens[k])
        basis = np.vstack([basis, v])
    return PointConfiguration(np.array(points), seed, index)


def sample_many(fe: FiniteEnsemble, n: int, seed: int, **kw) -> list[PointConfiguration]:
    return [sample(fe, seed, i, **kw) for i in range(n)]


@dataclass(frozen=True)
class CountStats:
    n_samples: int
    mean: float
    variance: float
    stderr: float
    stderr_variance: float


def empirical_count_stats(samples, d: Domain) -> CountStats:
    """Unbiased mean and variance of the number of points falling in ``d``."""
    counts = np.array([s.count_in(d) for s in samples], dtype=float)
    n = counts.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = float(counts.mean())
    var = float(counts.var(ddof=1))
    m4 = float(np.mean((counts - mean) ** 4))
    var_se = math.sqrt(max(0.0, (m4 - var * var * (n - 3) / (n - 1)) / n))
    return CountStats(n, mean, var, math.sqrt(var / n), var_se)


def write_points_csv(samples, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "x", "y"])
        for s in samples:
            for x, y in s.points:
                w.writerow([s.index, f"{x:.17g}", f"{y:.17g}"])


def write_stats_csv(stats: CountStats, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_samples", "mean_count", "var_count", "stderr_mean"])
        w.writerow([stats.n_samples, f"{stats.mean:.17g}", f"{stats.variance:.17g}", f"{stats.stderr:.17g}"])

"""Spectrum of the concentration operator on a domain.

The operator ``f -> int_Omega K(., w) f(w) dw`` is discretized by the
symmetrized Nystrom method on a quadrature rule: ``A[i, j] = sqrt(w_i w_j)
K(z_i, z_j)``.  Its eigenvalues approximate the operator spectrum in [0, 1].

Two independent oracles cover disks: the closed-form Ginibre spectrum
``P(j+1, pi R^2)`` and an angular-block solver that exploits rotational
invariance of the Landau-level kernels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss

from .geometry import Disk, Domain, QuadratureRule
from .kernels import KernelSpec, laguerre

__all__ = [
    "SpectralResolutionError",
    "ConcentrationMatrix",
    "Spectrum",
    "assemble",
    "eigenvalues",
    "eigh",
    "ginibre_disk_spectrum_analytic",
    "landau_disk_spectrum_radial",
    "regularized_lower_incomplete_gamma",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

DEFAULT_TOL = 1e-7
DISCARD_TOL = 1e-10


class SpectralResolutionError(RuntimeError):
    """Raised when a spectrum is flagged as under-resolved."""


@dataclass(frozen=True, eq=False)
class ConcentrationMatrix:
    entries: np.ndarray
    spec: KernelSpec
    rule: QuadratureRule

    @property
    def domain(self) -> Domain:
        return self.rule.target

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermitian_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Non-increasing eigenvalues clamped to [0, 1].

    ``raw_lambdas`` keeps the solver output; ``clamp_excess`` is how far it
    strayed outside [0, 1].  ``info`` carries solver diagnostics.
    """

    lambdas: np.ndarray
    raw_lambdas: np.ndarray
    clamp_excess: float = 0.0
    tol: float = DEFAULT_TOL
    flagged: bool = False
    reason: str = ""
    info: dict = field(default_factory=dict)

    @classmethod
    def from_raw(cls, raw, tol: float = DEFAULT_TOL, *, reason: str = "", info=None) -> "Spectrum":
        raw = np.sort(np.asarray(raw, dtype=float))[::-1].copy()
        excess = 0.0
        if raw.size:
            excess = max(0.0, float(raw.max()) - 1.0, -float(raw.min()))
        lam = np.clip(raw, 0.0, 1.0)
        flagged = bool(reason)
        if excess > tol:
            flagged = True
            reason = reason or (
                f"eigenvalues leave [0, 1] by {excess:.2e} > {tol:.0e}; "
                "quadrature is under-resolved, increase the order"
            )
        lam.setflags(write=False)
        raw.setflags(write=False)
        return cls(lam, raw, excess, tol, flagged, reason, dict(info or {}))

    def __len__(self) -> int:
        return self.lambdas.size

    def check(self) -> "Spectrum":
        if self.flagged:
            raise SpectralResolutionError(self.reason)
        return self

    def significant(self, cutoff: float = 1e-14) -> np.ndarray:
        """Eigenvalues above the cutoff; the rest contribute nothing at double precision."""
        return self.lambdas[self.lambdas > cutoff]


def assemble(spec: KernelSpec, rule: QuadratureRule, *, block: int = 512) -> ConcentrationMatrix:
    z = rule.z
    sw = np.sqrt(rule.weights)
    n = z.size
    A = np.empty((n, n), dtype=complex)
    for s in range(0, n, block):
        A[s : s + block] = spec(z[s : s + block, None], z[None, :])
        A[s : s + block] *= sw[s : s + block, None] * sw[None, :]
    # exact Hermitian symmetry, diagonal real
    A = 0.5 * (A + A.conj().T)
    return ConcentrationMatrix(A, spec, rule)


def eigh(m: ConcentrationMatrix, tol: float = DEFAULT_TOL):
    """Eigenvalues (as a Spectrum) and eigenvectors, columns sorted like the spectrum."""
    vals, vecs = scipy.linalg.eigh(m.entries, overwrite_a=False, check_finite=False)
    order = np.argsort(vals)[::-1]
    return Spectrum.from_raw(vals, tol, info={"method": "nystrom", "nodes": m.size}), vecs[:, order]


def eigenvalues(m: ConcentrationMatrix, tol: float = DEFAULT_TOL) -> Spectrum:
    vals = scipy.linalg.eigvalsh(m.entries, check_finite=False)
    return Spectrum.from_raw(vals, tol, info={"method": "nystrom", "nodes": m.size})


def regularized_lower_incomplete_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a).

    Power series for x < a + 1, Lentz continued fraction for the
    complement otherwise.
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 0.0
    log_pref = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = total = 1.0 / a
        ap = a
        for _ in range(10000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return min(1.0, total * math.exp(log_pref))
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return max(0.0, 1.0 - math.exp(log_pref) * h)


def ginibre_disk_spectrum_analytic(R: float, count: int) -> Spectrum:
    """Ginibre spectrum on a disk of radius R: lambda_j = P(j + 1, pi R^2)."""
    if not R > 0 or count < 1:
        raise ValueError("need R > 0 and count >= 1")
    X = math.pi * R * R
    lam = [regularized_lower_incomplete_gamma(j + 1.0, X) for j in range(count)]
    return Spectrum.from_raw(lam, info={"method": "analytic"})


def default_max_angular(R: float, n: int = 0) -> int:
    X = math.pi * R * R
    return max(2 * math.ceil(X), math.ceil(X + 12.0 * math.sqrt(X) + 40.0)) + n


def default_radial_order(R: float) -> int:
    return max(32, math.ceil(16.0 * R + 16.0))


def landau_disk_spectrum_radial(
    n: int,
    R: float,
    max_angular: int | None = None,
    radial_order: int | None = None,
    tol: float = DEFAULT_TOL,
) -> Spectrum:
    """Landau-level spectrum on a centered disk, one radial problem per angular mode.

    Rotational invariance makes the operator commute with rotations; in
    polar coordinates each Fourier mode m contributes the eigenvalues of a
    symmetric radial Nystrom matrix built from the m-th angular Fourier
    coefficient of the kernel.  Modes run from -n (polyanalytic part) to
    ``max_angular``; one extra mode on each side is solved to verify that the
    truncation discards nothing above 1e-10.
    """
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    X = math.pi * R * R
    if max_angular is None:
        max_angular = default_max_angular(R, n)
    if max_angular < 2 * math.ceil(X):
        raise ValueError(f"max_angular must be >= 2*ceil(pi R^2) = {2 * math.ceil(X)}")
    if radial_order is None:
        radial_order = default_radial_order(R)

    t, w = leggauss(radial_order)
    r = 0.5 * R * (t + 1.0)
    u = 0.5 * R * w * r
    lo, hi = -n - 1, max_angular + 1
    span = hi - lo + 1
    n_fft = 1 << math.ceil(math.log2(2 * span + 64))
    psi = 2.0 * math.pi * np.arange(n_fft) / n_fft
    modes = np.arange(lo, hi + 1)

    coeff = np.empty((span, radial_order, radial_order))
    cos_psi, e_psi = np.cos(psi), np.exp(1j * psi)
    for i in range(radial_order):
        rho = r[i:, None]
        k = np.exp(-0.5 * math.pi * (r[i] ** 2 + rho**2) + math.pi * r[i] * rho * e_psi)
        if n:
            k = k * laguerre(n, math.pi * (r[i] ** 2 + rho**2 - 2.0 * r[i] * rho * cos_psi))
        c = np.fft.fft(k, axis=1).real * (2.0 * math.pi / n_fft)
        c = c[:, modes % n_fft].T
        coeff[:, i, i:] = c
        coeff[:, i:, i] = c
    su = np.sqrt(u)
    blocks = coeff * su[None, :, None] * su[None, None, :]
    raw = []
    edge = 0.0
    for k, m in enumerate(modes):
        ev = np.linalg.eigvalsh(blocks[k])
        if m in (lo, hi):
            edge = max(edge, float(np.abs(ev).max()))
        else:
            raw.append(ev)
    reason = ""
    if edge > DISCARD_TOL:
        reason = (
            f"angular truncation discards an eigenvalue {edge:.2e} > {DISCARD_TOL:.0e}; "
            "increase max_angular"
        )
    info = {
        "method": "radial",
        "blocks": span - 2,
        "max_angular": max_angular,
        "radial_order": radial_order,
        "discarded_max": edge,
    }
    return Spectrum.from_raw(np.concatenate(raw), tol, reason=reason, info=info)


def write_spectrum_csv(s: Spectrum, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "lambda", "raw_lambda"])
            for i, (lam, raw) in enumerate(zip(s.lambdas, s.raw_lambdas)):
                writer.writerow([i, f"{lam:.17g}", f"{raw:.17g}"])
    except OSError as exc:
        raise OSError(f"cannot write spectrum to {path}: {exc}") from exc


def read_spectrum_csv(path, tol: float = DEFAULT_TOL) -> Spectrum:
    with Path(path).open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return Spectrum.from_raw([float(r["raw_lambda"]) for r in rows], tol)


def solve(
    spec: KernelSpec,
    domain: Domain,
    order: int,
    *,
    method: str = "auto",
    tol: float = DEFAULT_TOL,
    max_nodes: int = 4000,
) -> Spectrum:
    """Spectrum of the concentration operator by the best available route.

    ``radial`` (chosen by ``auto`` for rotation-invariant kernels on disks
    centered at the origin) uses the angular-block solver with the radial
    order scaled to the radius; ``dense`` assembles the full Nystrom matrix
    on the domain's quadrature rule.
    """
    from .geometry import quadrature

    radial_ok = (
        isinstance(domain, Disk) and domain.center == (0.0, 0.0) and spec.level is not None
    )
    if method == "auto":
        method = "radial" if radial_ok else "dense"
    if method == "radial":
        if not radial_ok:
            raise ValueError("radial solver needs a rotation-invariant kernel on a centered disk")
        radial_order = max(order, default_radial_order(domain.radius))
        return landau_disk_spectrum_radial(spec.level, domain.radius, radial_order=radial_order, tol=tol)
    if method != "dense":
        raise ValueError(f"unknown solver {method!r}")
    rule = quadrature(domain, order)
    if len(rule) > max_nodes:
        raise ValueError(
            f"{len(rule)} quadrature nodes exceed the cap of {max_nodes}; lower the order"
        )
    return eigenvalues(assemble(spec, rule), tol)

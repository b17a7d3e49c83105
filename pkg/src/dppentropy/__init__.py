"""Entanglement entropy, number variance and Schatten traces of planar
determinantal point processes, computed from the spectrum of the
concentration operator on compact domains."""

from .geometry import Disk, Domain, Point2, Polygon, QuadratureRule, Rectangle, make_domain, quadrature
from .kernels import KernelSpec, WindowSamples, parse_kernel
from .spectral import Spectrum, assemble, eigenvalues, solve
from .functionals import entropy, expected_count, schatten_h_trace, variance_direct, variance_spectral

__version__ = "0.1.0"

__all__ = [
    "Disk",
    "Domain",
    "Point2",
    "Polygon",
    "QuadratureRule",
    "Rectangle",
    "make_domain",
    "quadrature",
    "KernelSpec",
    "WindowSamples",
    "parse_kernel",
    "Spectrum",
    "assemble",
    "eigenvalues",
    "solve",
    "entropy",
    "expected_count",
    "schatten_h_trace",
    "variance_direct",
    "variance_spectral",
]

"""Correlation kernels of planar Weyl-Heisenberg ensembles.

Points of the plane are handled as complex numbers ``z = x + i*xi``.  All
kernels share the Ginibre phase convention

    K(z, w) = exp(i*pi*(x'xi' - x*xi)) * exp(-pi/2 (|z|^2 + |w|^2) + pi z conj(w)) * L_n(pi|z-w|^2)

so that ``|K(z, w)|`` depends only on ``z - w`` and ``K(z, z) = 1``.  Kernels
built from a sampled window are brought to the same convention; spectral
quantities do not depend on the choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import Point2

__all__ = [
    "KernelError",
    "WindowSamples",
    "KernelSpec",
    "as_complex",
    "laguerre",
    "hermite_function",
    "ginibre_kernel",
    "landau_kernel",
    "stft",
    "ambiguity",
    "wh_kernel",
    "window_constant",
    "parse_kernel",
    "load_window",
]

HERMITE_MAX = 30
TAIL_RTOL = 1e-12


class KernelError(ValueError):
    pass


def as_complex(p):
    """Coerce a Point2, (x, y) pair, complex scalar or array to complex."""
    if isinstance(p, Point2):
        return p.z
    if isinstance(p, tuple) and len(p) == 2:
        return complex(p[0], p[1])
    return np.asarray(p) + 0j if not np.isscalar(p) else complex(p)


def laguerre(n: int, x):
    """Laguerre polynomial L_n(x) by the three-term recurrence."""
    if n < 0:
        raise KernelError(f"Laguerre degree must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def hermite_function(n: int, t):
    """L2-normalized Hermite function h_n(t) adapted to exp(-pi t^2).

    ``h_0(t) = 2**0.25 * exp(-pi t^2)``; higher orders follow from the
    orthonormal recurrence in the variable ``u = sqrt(2 pi) t``.
    """
    if not 0 <= n <= HERMITE_MAX:
        raise KernelError(f"Hermite order must be in [0, {HERMITE_MAX}], got {n}")
    t = np.asarray(t, dtype=float)
    u = math.sqrt(2 * math.pi) * t
    scale = (2 * math.pi) ** 0.25
    prev = np.zeros_like(u)
    cur = math.pi**-0.25 * np.exp(-0.5 * u * u)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * u * cur - math.sqrt(k / (k + 1)) * prev
    out = scale * cur
    return out if out.ndim else float(out)


def _phase(z, w):
    x, xi = np.real(z), np.imag(z)
    xp, xip = np.real(w), np.imag(w)
    return math.pi * (xp * xip - x * xi)


def ginibre_kernel(z, w):
    """Infinite Ginibre kernel with the full phase factor."""
    z = as_complex(z)
    w = as_complex(w)
    expo = (
        -0.5 * math.pi * (np.abs(z) ** 2 + np.abs(w) ** 2)
        + math.pi * z * np.conj(w)
        + 1j * _phase(z, w)
    )
    return np.exp(expo)


def landau_kernel(n: int, z, w):
    """Kernel of the n-th Landau level; ``n = 0`` is the Ginibre kernel."""
    z = as_complex(z)
    w = as_complex(w)
    return ginibre_kernel(z, w) * laguerre(n, math.pi * np.abs(z - w) ** 2)


@dataclass(frozen=True, eq=False)
class WindowSamples:
    """Uniform samples ``values[k] = g(t0 + k*dt)`` of a window, normalized to unit L2 norm."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise KernelError(f"window spacing must be positive, got {self.dt}")
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size < 3:
            raise KernelError("window needs at least 3 samples")
        peak = np.abs(v).max()
        if peak == 0 or not np.all(np.isfinite(v)):
            raise KernelError("window must be finite and non-zero")
        if max(abs(v[0]), abs(v[-1])) > TAIL_RTOL * peak:
            raise KernelError(
                "window does not decay to the grid edges "
                f"(edge/peak = {max(abs(v[0]), abs(v[-1])) / peak:.1e}); extend the grid"
            )
        v = v / math.sqrt(_trapezoid(np.abs(v) ** 2, self.dt))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, t0: float, t1: float, dt: float) -> "WindowSamples":
        count = int(round((t1 - t0) / dt)) + 1
        t = t0 + dt * np.arange(count)
        return cls(t0, dt, fn(t))

    @classmethod
    def hermite(cls, n: int, half_width: float = 8.0, dt: float = 1e-3) -> "WindowSamples":
        return cls.from_function(lambda t: hermite_function(n, t), -half_width, half_width, dt)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.values.size - 1)

    def support(self) -> tuple[float, float]:
        """Interval outside which samples are below the tail tolerance."""
        mag = np.abs(self.values)
        idx = np.nonzero(mag > TAIL_RTOL * mag.max())[0]
        return (self.t0 + self.dt * idx[0], self.t0 + self.dt * idx[-1])

    def norm2(self) -> float:
        return _trapezoid(np.abs(self.values) ** 2, self.dt)


def _trapezoid(y, dt):
    return float(dt * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def load_window(path) -> WindowSamples:
    """Read ``t g(t)`` or ``t re im`` columns with uniform spacing in t."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise KernelError(f"{path}:{lineno}: expected 2 or 3 columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts] + [0.0] * (3 - len(parts)))
        except ValueError as exc:
            raise KernelError(f"{path}:{lineno}: malformed number in {line!r}") from exc
    if len(rows) < 3:
        raise KernelError(f"{path}: need at least 3 samples")
    data = np.array(rows)
    steps = np.diff(data[:, 0])
    dt = float(np.mean(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise KernelError(f"{path}: t column must be uniformly increasing")
    return WindowSamples(float(data[0, 0]), dt, data[:, 1] + 1j * data[:, 2])


def _interp(g: WindowSamples, t):
    tg = g.t
    re = np.interp(t, tg, g.values.real, left=0.0, right=0.0)
    im = np.interp(t, tg, g.values.imag, left=0.0, right=0.0)
    return re + 1j * im


def stft(g: WindowSamples, f: WindowSamples, x, xi, *, chunk: int = 64):
    """Short-time Fourier transform V_g f(x, xi) by the trapezoid rule on f's grid.

    The shift ``g(t - x)`` is evaluated by linear interpolation and is zero
    off g's grid.  ``x`` and ``xi`` broadcast against each other.
    """
    if abs(g.dt - f.dt) > 1e-9 * f.dt:
        raise KernelError("window grids must share the same spacing")
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    shape = x.shape
    x = x.ravel()
    xi = xi.ravel()
    # restrict the integral to f's effective support
    fa, fb = f.support()
    i0 = max(0, int(math.floor((fa - f.t0) / f.dt)) - 1)
    i1 = min(f.values.size, int(math.ceil((fb - f.t0) / f.dt)) + 2)
    t = f.t[i0:i1]
    fw = f.values[i0:i1] * f.dt
    if i0 == 0:
        fw = fw.copy()
        fw[0] *= 0.5
    if i1 == f.values.size:
        fw = fw.copy()
        fw[-1] *= 0.5
    out = np.empty(x.size, dtype=complex)
    for s in range(0, x.size, chunk):
        xs = x[s : s + chunk, None]
        gs = np.conj(_interp(g, t[None, :] - xs))
        mod = np.exp(-2j * math.pi * xi[s : s + chunk, None] * t[None, :])
        out[s : s + chunk] = np.sum(fw[None, :] * gs * mod, axis=1)
    return out.reshape(shape) if shape else complex(out[0])


def ambiguity(g: WindowSamples, x, xi):
    """V_g g(x, xi)."""
    return stft(g, g, x, xi)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Which kernel to use.

    ``variant`` is one of ``ginibre``, ``landau``, ``wh_hermite`` or
    ``wh_sampled``; ``n`` is the level/Hermite order and ``window`` the
    samples for ``wh_sampled``.
    """

    variant: str
    n: int = 0
    window: WindowSamples | None = None

    def __post_init__(self):
        if self.variant not in ("ginibre", "landau", "wh_hermite", "wh_sampled"):
            raise KernelError(f"unknown kernel variant {self.variant!r}")
        if self.variant in ("landau", "wh_hermite"):
            if self.n < 0:
                raise KernelError(f"level must be >= 0, got {self.n}")
            if self.variant == "wh_hermite" and self.n > HERMITE_MAX:
                raise KernelError(f"Hermite order must be <= {HERMITE_MAX}")
        if self.variant == "wh_sampled" and self.window is None:
            raise KernelError("wh_sampled needs window samples")

    @classmethod
    def ginibre(cls) -> "KernelSpec":
        return cls("ginibre")

    @classmethod
    def landau(cls, n: int) -> "KernelSpec":
        return cls("landau", n)

    @classmethod
    def wh_hermite(cls, n: int) -> "KernelSpec":
        return cls("wh_hermite", n)

    @classmethod
    def wh_sampled(cls, window: WindowSamples) -> "KernelSpec":
        return cls("wh_sampled", 0, window)

    @property
    def level(self) -> int | None:
        """Landau level for the rotation-invariant variants, else None."""
        if self.variant == "ginibre":
            return 0
        if self.variant in ("landau", "wh_hermite"):
            return self.n
        return None

    def __call__(self, z, w):
        if self.variant == "ginibre":
            return ginibre_kernel(z, w)
        if self.variant == "landau":
            return landau_kernel(self.n, z, w)
        return wh_kernel(self, z, w)

    def describe(self) -> str:
        if self.variant == "ginibre":
            return "ginibre"
        if self.variant == "landau":
            return f"landau:{self.n}"
        if self.variant == "wh_hermite":
            return f"wh-hermite:{self.n}"
        return "wh-file"


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``ginibre``, ``landau:<n>``, ``wh-hermite:<n>`` or ``wh-file:<path>``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower().replace("_", "-")
    if kind == "ginibre" and not arg:
        return KernelSpec.ginibre()
    if kind == "wh-file":
        return KernelSpec.wh_sampled(load_window(arg))
    if kind in ("landau", "wh-hermite"):
        try:
            n = int(arg)
        except ValueError:
            raise KernelError(f"malformed kernel descriptor {text!r}") from None
        return KernelSpec.landau(n) if kind == "landau" else KernelSpec.wh_hermite(n)
    raise KernelError(f"unknown kernel descriptor {text!r}")


def wh_kernel(spec: KernelSpec, z, w):
    """Weyl-Heisenberg kernel for a Hermite or sampled window.

    The sampled case evaluates the window integral through the ambiguity
    function, ``V_g g(z - w)`` times a phase, and maps it onto the Ginibre
    phase convention: a diagonal unitary change plus complex conjugation,
    neither of which alters any spectrum.
    """
    if spec.variant == "wh_hermite":
        return landau_kernel(spec.n, z, w)
    if spec.variant != "wh_sampled":
        raise KernelError(f"wh_kernel needs a Weyl-Heisenberg spec, got {spec.variant}")
    z, w = np.broadcast_arrays(as_complex(z), as_complex(w))
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    w = np.atleast_1d(w)
    x, xi = z.real, z.imag
    xp, xip = w.real, w.imag
    v = ambiguity(spec.window, x - xp, xi - xip)
    # window-integral form: exp(-2 pi i (xi - xi') x') V_g g(z - w)
    direct = np.exp(-2j * math.pi * (xi - xip) * xp) * v
    out = np.exp(2j * _phase(z, w)) * np.conj(direct)
    return complex(out[0]) if scalar else out


def _ambiguity_modulus_radial(n: int, r):
    return np.abs(laguerre(n, math.pi * r * r)) * np.exp(-0.5 * math.pi * r * r)


def _radial_cutoff(profile, start=1.0, limit=64.0):
    r = start
    while r < limit:
        if profile(np.array([r]))[0] < TAIL_RTOL and profile(np.array([r * 1.25]))[0] < TAIL_RTOL:
            return r
        r *= 1.25
    return None


def window_constant(spec: KernelSpec, s: float = 0.5, *, parts: bool = False):
    """Window constant C_g = (int |V_g g|)^2 * int (1+|z|)^(2s) |V_g g|^2.

    Returns ``inf`` when the ambiguity function of a sampled window does not
    decay below the tail tolerance, meaning the area-law hypothesis fails at
    working precision.  With ``parts=True`` the two factors are returned.
    """
    if s < 0.5:
        raise KernelError(f"s must be >= 1/2, got {s}")
    if spec.variant in ("ginibre", "landau", "wh_hermite"):
        n = spec.level
        prof = lambda r: _ambiguity_modulus_radial(n, r)  # noqa: E731
        rmax = _radial_cutoff(prof)
        # panels between the kinks of |L_n(pi r^2)|
        roots = np.sort(np.polynomial.laguerre.lagroots([0] * n + [1])) if n else np.array([])
        edges = np.concatenate([[0.0], np.sqrt(roots / math.pi), [rmax]])
        r, wr = _panel_rule(edges, 48)
        phi = prof(r)
        first = 2 * math.pi * np.dot(wr, r * phi)
        second = 2 * math.pi * np.dot(wr, r * (1 + r) ** (2 * s) * phi**2)
    elif spec.variant == "wh_sampled":
        g = spec.window
        a, b = g.support()
        width = b - a
        # |V_g g| vanishes for |x| beyond the support width; decay in xi is tested
        n_ang = 96
        theta = 2 * math.pi * np.arange(n_ang) / n_ang

        def ring_max(rr):
            rr = np.atleast_1d(rr)
            vals = []
            for r0 in rr:
                x = r0 * np.cos(theta)
                xi = r0 * np.sin(theta)
                keep = np.abs(x) < width
                m = 0.0
                if keep.any():
                    m = float(np.abs(ambiguity(g, x[keep], xi[keep])).max())
                vals.append(m)
            return np.array(vals)

        limit = min(64.0, 0.5 / g.dt)
        rmax = _radial_cutoff(ring_max, start=1.0, limit=limit)
        if rmax is None:
            return (math.inf, math.inf) if parts else math.inf
        edges = np.linspace(0.0, rmax, int(math.ceil(rmax / 0.5)) + 1)
        r, wr = _panel_rule(edges, 16)
        R, T = np.meshgrid(r, theta, indexing="ij")
        X, XI = R * np.cos(T), R * np.sin(T)
        mod = np.zeros(X.shape)
        keep = np.abs(X) < width
        mod[keep] = np.abs(ambiguity(g, X[keep], XI[keep]))
        wts = np.outer(wr * r, np.full(n_ang, 2 * math.pi / n_ang))
        first = float(np.sum(wts * mod))
        second = float(np.sum(wts * (1 + R) ** (2 * s) * mod**2))
    else:  # pragma: no cover - guarded by KernelSpec
        raise KernelError(spec.variant)
    if parts:
        return first**2, second
    return first**2 * second


def _panel_rule(edges, per_panel):
    t, w = leggauss(per_panel)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        nodes.append(0.5 * (b - a) * (t + 1) + a)
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)

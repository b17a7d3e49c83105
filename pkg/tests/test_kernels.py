import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import eval_laguerre

from dppentropy.geometry import Point2
from dppentropy.kernels import (
    KernelError,
    KernelSpec,
    WindowSamples,
    ambiguity,
    ginibre_kernel,
    hermite_function,
    landau_kernel,
    laguerre,
    load_window,
    parse_kernel,
    stft,
    window_constant,
    wh_kernel,
)

rng = np.random.default_rng(20240601)


def random_points(n, scale=1.5):
    return rng.uniform(-scale, scale, n) + 1j * rng.uniform(-scale, scale, n)


@pytest.fixture(scope="module")
def h0_window():
    return WindowSamples.hermite(0, half_width=8.0, dt=5e-4)


def test_ginibre_diagonal_and_modulus():
    assert ginibre_kernel(Point2(0, 0), Point2(0, 0)) == pytest.approx(1.0)
    z, w = 0.3 + 0.2j, 0.3 + 1.2j
    # direct complex evaluation of the modulus
    direct = abs(np.exp(-0.5 * math.pi * (abs(z) ** 2 + abs(w) ** 2) + math.pi * z * np.conj(w)))
    assert abs(ginibre_kernel(z, w)) == pytest.approx(math.exp(-math.pi / 2), abs=1e-12)
    assert direct == pytest.approx(0.2078795763507619, abs=1e-12)


def test_hermitian_symmetry_all_variants(h0_window):
    z, w = random_points(100), random_points(100)
    for spec in (KernelSpec.ginibre(), KernelSpec.landau(2), KernelSpec.wh_hermite(3)):
        assert np.allclose(spec(z, w), np.conj(spec(w, z)), atol=1e-14)
    sampled = KernelSpec.wh_sampled(h0_window)
    assert np.allclose(sampled(z[:20], w[:20]), np.conj(sampled(w[:20], z[:20])), atol=1e-10)


@pytest.mark.parametrize("n", range(6))
def test_landau_diagonal_and_bound(n):
    z, w = random_points(100), random_points(100)
    assert np.allclose(landau_kernel(n, z, z), 1.0, atol=1e-9)
    vals = np.abs(landau_kernel(n, z, w))
    assert np.all(vals <= 1.0 + 1e-12)
    # modulus depends only on z - w
    v = random_points(100)
    assert np.allclose(vals, np.abs(landau_kernel(n, z + v, w + v)), atol=1e-12)


def test_landau_zero_is_ginibre():
    z, w = random_points(100), random_points(100)
    assert np.array_equal(landau_kernel(0, z, w), ginibre_kernel(z, w))


def test_landau_one_vanishes_at_laguerre_root():
    z = 0.2 - 0.1j
    w = z + math.sqrt(1 / math.pi) * np.exp(0.7j)
    assert abs(landau_kernel(1, z, w)) < 1e-15


def test_laguerre_examples_and_recurrence():
    assert laguerre(0, 3.7) == 1.0
    assert laguerre(1, 2.0) == -1.0
    assert laguerre(2, 1.0) == pytest.approx(-0.5)
    x = np.linspace(0, 30, 50)
    for n in range(12):
        assert np.allclose(laguerre(n, x), eval_laguerre(n, x), rtol=1e-10, atol=1e-10)
    with pytest.raises(KernelError):
        laguerre(-1, 0.0)


def test_hermite_functions():
    assert hermite_function(0, 0.0) == pytest.approx(2**0.25)
    assert hermite_function(1, 0.0) == 0.0
    t = np.linspace(-6, 6, 120001)
    dt = t[1] - t[0]
    for n in (2, 7):
        h = hermite_function(n, t)
        assert trapezoid(h * h, dx=dt) == pytest.approx(1.0, abs=1e-8)
    assert trapezoid(hermite_function(2, t) * hermite_function(4, t), dx=dt) == pytest.approx(0, abs=1e-10)
    # Rodrigues form for n = 1: 2^{1/4} 2 sqrt(pi) t exp(-pi t^2)
    assert hermite_function(1, 0.4) == pytest.approx(2**0.25 * 2 * math.sqrt(math.pi) * 0.4 * math.exp(-math.pi * 0.16))
    with pytest.raises(KernelError):
        hermite_function(31, 0.0)


def test_stft_examples(h0_window):
    assert stft(h0_window, h0_window, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert abs(ambiguity(h0_window, 1.0, 0.0)) == pytest.approx(math.exp(-math.pi / 2), abs=1e-6)
    x, xi = rng.uniform(-2, 2, 20), rng.uniform(-2, 2, 20)
    assert np.allclose(np.abs(ambiguity(h0_window, x, xi)), np.abs(ambiguity(h0_window, -x, -xi)), atol=1e-9)


def test_stft_vanishes_for_disjoint_supports(h0_window):
    assert abs(stft(h0_window, h0_window, 7.0, 0.3)) < 1e-12


def test_stft_rejects_mismatched_grids(h0_window):
    other = WindowSamples.hermite(0, half_width=8.0, dt=1e-3)
    with pytest.raises(KernelError, match="spacing"):
        stft(h0_window, other, 0.0, 0.0)


def test_window_normalization():
    g = WindowSamples.from_function(lambda t: 3.0 * np.exp(-math.pi * t * t), -8, 8, 1e-3)
    assert g.norm2() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(KernelError, match="decay"):
        WindowSamples.from_function(lambda t: np.ones_like(t), -1, 1, 0.1)


def test_wh_hermite_delegates_to_landau():
    z, w = random_points(30), random_points(30)
    assert np.array_equal(wh_kernel(KernelSpec.wh_hermite(0), z, w), ginibre_kernel(z, w))
    assert np.array_equal(wh_kernel(KernelSpec.wh_hermite(2), z, w), landau_kernel(2, z, w))


def test_wh_sampled_matches_ginibre(h0_window):
    z, w = random_points(50, 1.0), random_points(50, 1.0)
    spec = KernelSpec.wh_sampled(h0_window)
    vals = spec(z, w)
    assert np.max(np.abs(np.abs(vals) - np.abs(ginibre_kernel(z, w)))) <= 1e-6
    # the phase convention agrees as well
    assert np.max(np.abs(vals - ginibre_kernel(z, w))) <= 1e-6
    assert np.allclose(spec(z, z), 1.0, atol=1e-9)


def test_wh_sampled_hermite_one_matches_landau_one():
    g = WindowSamples.hermite(1, half_width=8.0, dt=5e-4)
    z, w = random_points(20, 1.0), random_points(20, 1.0)
    assert np.max(np.abs(KernelSpec.wh_sampled(g)(z, w) - landau_kernel(1, z, w))) <= 1e-6


def test_window_constant_gaussian():
    spec = KernelSpec.wh_hermite(0)
    # closed forms: (int exp(-pi r^2/2) dA)^2 = 4, int (1+r) exp(-pi r^2) dA = 3/2
    first, second = window_constant(spec, 0.5, parts=True)
    assert first == pytest.approx(4.0, abs=1e-6)
    assert second == pytest.approx(1.5, abs=1e-6)
    assert window_constant(spec, 0.5) == pytest.approx(6.0, abs=1e-6)


def test_window_constant_monotone_in_s():
    for spec in (KernelSpec.wh_hermite(0), KernelSpec.wh_hermite(2)):
        values = [window_constant(spec, s) for s in (0.5, 0.75, 1.0, 2.0, 3.0)]
        assert all(np.isfinite(values))
        assert all(b >= a for a, b in zip(values, values[1:]))


def test_window_constant_sampled_gaussian():
    g = WindowSamples.hermite(0, half_width=6.0, dt=2e-3)
    assert window_constant(KernelSpec.wh_sampled(g), 0.5) == pytest.approx(6.0, rel=2e-3)


def test_window_constant_box_window_violates_hypothesis():
    # a unit box has an ambiguity function decaying only like 1/|xi|
    g = WindowSamples.from_function(lambda t: (np.abs(t) <= 0.5).astype(float), -1, 1, 0.02)
    assert window_constant(KernelSpec.wh_sampled(g), 0.5) == math.inf


def test_window_constant_rejects_small_s():
    with pytest.raises(KernelError):
        window_constant(KernelSpec.wh_hermite(0), 0.25)


def test_parse_kernel(tmp_path):
    assert parse_kernel("landau:2").variant == "landau"
    assert parse_kernel("landau:2").n == 2
    assert parse_kernel("wh-hermite:3").level == 3
    assert parse_kernel("ginibre").level == 0
    t = np.arange(-8, 8.0005, 1e-3)
    path = tmp_path / "g.txt"
    np.savetxt(path, np.column_stack([t, hermite_function(0, t)]))
    spec = parse_kernel(f"wh-file:{path}")
    assert spec.variant == "wh_sampled" and spec.level is None
    assert abs(spec(0.3 + 0.1j, 0.3 + 0.1j)) == pytest.approx(1.0, abs=1e-9)
    for bad in ("landau:x", "bessel", "ginibre:1"):
        with pytest.raises(KernelError):
            parse_kernel(bad)


def test_window_file_with_imaginary_column(tmp_path):
    t = np.arange(-6, 6.0005, 1e-3)
    g = hermite_function(0, t) * np.exp(2j * math.pi * 0.5 * t)
    path = tmp_path / "chirp.txt"
    np.savetxt(path, np.column_stack([t, g.real, g.imag]))
    w = load_window(path)
    assert np.iscomplexobj(w.values)
    # modulation only changes the phase of the ambiguity function
    assert abs(ambiguity(w, 1.0, 0.0)) == pytest.approx(math.exp(-math.pi / 2), abs=1e-5)


def test_window_file_requires_uniform_grid(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0\n0.1 1\n0.3 0\n", encoding="utf-8")
    with pytest.raises(KernelError, match="uniform"):
        load_window(path)

import math

import numpy as np
import pytest

from dppentropy import finite_ensemble as fin
from dppentropy.geometry import Disk, Rectangle, quadrature
from dppentropy.kernels import KernelSpec, ginibre_kernel
from dppentropy.spectral import Spectrum, ginibre_disk_spectrum_analytic, landau_disk_spectrum_radial

from conftest import disk_of_area

# frozen from scipy.special.gammainc: 1 - P(1, 1) and 4 - sum_{j<4} P(j+1, 4)
GAP_X1 = 0.36787944117144233
GAP_X4 = 0.7814672565878847


@pytest.fixture(scope="module")
def fe4():
    return fin.build_finite(KernelSpec.ginibre(), disk_of_area(4.0), order=24)


@pytest.fixture(scope="module")
def fe1():
    return fin.build_finite(KernelSpec.ginibre(), disk_of_area(1.0), order=24)


def points_in_disk(d, n, seed=7):
    rng = np.random.default_rng(seed)
    r = d.radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * math.pi, n)
    return r * np.exp(1j * t)


def test_truncation_rank_examples():
    assert fin.truncation_rank(Disk(1.0)) == 4
    assert fin.truncation_rank(Rectangle(1.0, 1.0)) == 1
    assert fin.truncation_rank(disk_of_area(10.0)) == 10
    assert fin.truncation_rank(disk_of_area(10.5)) == 11


def test_rank_and_gram(fe4):
    assert fe4.rank == 4
    assert np.abs(fe4.gram() - np.eye(4)).max() < 1e-8


def test_first_eigenfunction_modulus(fe4):
    z = points_in_disk(fe4.domain, 20)
    e1 = fe4.eigenfunctions(z)[:, 0]
    assert np.abs(np.abs(e1) - np.exp(-0.5 * math.pi * np.abs(z) ** 2)).max() < 1e-5


def test_extension_norm_on_domain(fe4):
    # int_Omega |e_n|^2 = lambda_n on the domain's own rule
    e = fe4.eigenfunctions(fe4.rule.z)
    norms = fe4.rule.weights @ np.abs(e) ** 2
    assert np.allclose(norms, fe4.lambdas, atol=1e-10)


def test_intensity_bounded_and_matches_oracle(fe4):
    z = points_in_disk(fe4.domain, 20, seed=11)
    rho = fin.intensity_finite(fe4, z)
    assert np.all(rho <= 1 + 1e-6) and np.all(rho >= 0)
    assert fin.intensity_finite(fe4, 0j) < 1 + 1e-6
    oracle = np.real(fin.finite_ginibre_kernel(4, z, z))
    assert np.abs(rho - oracle).max() < 1e-4


def test_truncated_kernel_modulus_matches_oracle(fe4):
    z = points_in_disk(fe4.domain, 20, seed=12)
    w = points_in_disk(fe4.domain, 20, seed=13)
    e_z, e_w = fe4.eigenfunctions(z), fe4.eigenfunctions(w)
    k = np.sum(e_z * np.conj(e_w), axis=1)
    assert np.abs(np.abs(k) - np.abs(fin.finite_ginibre_kernel(4, z, w))).max() < 1e-4


def test_intensity_integrates_to_rank(fe4):
    box = quadrature(fin.enclosing_box(fe4.domain), 80)
    assert box.integrate(fin.intensity_finite(fe4, box.z)) == pytest.approx(4.0, abs=1e-3)


def test_finite_ginibre_kernel_examples():
    rng = np.random.default_rng(5)
    z = rng.uniform(-0.7, 0.7, 30) + 1j * rng.uniform(-0.7, 0.7, 30)
    w = rng.uniform(-0.7, 0.7, 30) + 1j * rng.uniform(-0.7, 0.7, 30)
    assert np.abs(fin.finite_ginibre_kernel(60, z, w) - ginibre_kernel(z, w)).max() < 1e-10
    for N in (1, 3, 9):
        assert fin.finite_ginibre_kernel(N, 0j, 0j) == pytest.approx(1.0)
    assert np.allclose(
        np.abs(fin.finite_ginibre_kernel(1, z, w)), np.exp(-0.5 * math.pi * (np.abs(z) ** 2 + np.abs(w) ** 2))
    )
    with pytest.raises(ValueError):
        fin.finite_ginibre_kernel(0, 0j, 0j)


@pytest.mark.parametrize("fixture, gap", [("fe1", GAP_X1), ("fe4", GAP_X4)])
def test_theorem_chains(request, fixture, gap):
    fe = request.getfixturevalue(fixture)
    assert fin.theorem43_gap(fe) == pytest.approx(gap, abs=1e-8)
    V = fe.variance
    assert V <= 2 * fin.theorem43_gap(fe) + 1e-6
    l1 = fin.l1_deviation(fe)
    assert V <= l1 + 1e-6
    assert l1 == pytest.approx(fin.l1_identity(fe), abs=1e-6)


def test_gap_zero_for_saturated_spectrum(fe1):
    sat = Spectrum.from_raw([1.0, 0.0, 0.0])
    fake = fin.FiniteEnsemble(fe1.spec, fe1.domain, fe1.rule, sat, fe1.vectors, fe1.coeffs)
    assert fin.theorem43_gap(fake) == 0.0


def test_l1_grows_linearly_with_radius():
    # middle identity evaluated on the rotation-invariant spectrum
    radii = np.arange(2.0, 7.0)
    vals = []
    for R in radii:
        lam = landau_disk_spectrum_radial(0, R).check().lambdas
        N = fin.truncation_rank(Disk(R))
        head = lam[:N].sum()
        vals.append((N - head) + (lam.sum() - head))
    slopes = np.array(vals) / radii
    assert (slopes.max() - slopes.min()) / slopes.mean() < 0.1
    assert vals[0] == pytest.approx(2.8473, abs=1e-3)


def test_l1_rejects_small_box(fe4):
    small = quadrature(Rectangle.centered(2.5, 2.5), 40)
    with pytest.raises(fin.EnsembleError, match="box"):
        fin.l1_deviation(fe4, small)


def test_build_rejections():
    spec = KernelSpec.ginibre()
    with pytest.raises(fin.EnsembleError, match="nodes"):
        fin.build_finite(spec, disk_of_area(30.0), order=4)


def test_sampler_cardinality_and_determinism(fe4):
    a = fin.sample(fe4, seed=3, index=5)
    b = fin.sample(fe4, seed=3, index=5)
    c = fin.sample(fe4, seed=3, index=6)
    assert len(a) == 4 and len(c) == 4
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_sampler_monte_carlo(fe4):
    samples = fin.sample_many(fe4, 300, seed=1)
    assert all(len(s) == 4 for s in samples)
    stats = fin.empirical_count_stats(samples, fe4.domain)
    expected = float(fe4.lambdas.sum())
    assert abs(stats.mean - expected) <= 3 * stats.stderr


def test_count_stats_examples(fe1):
    inside = fin.PointConfiguration(np.zeros((1, 2)), 0)
    st = fin.empirical_count_stats([inside, inside], fe1.domain)
    assert (st.mean, st.variance) == (1.0, 0.0)
    one = fin.PointConfiguration(np.array([[0.0, 0.0], [9.0, 9.0], [8.0, 8.0]]), 0)
    three = fin.PointConfiguration(np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]]), 0)
    st = fin.empirical_count_stats([one, three], Disk(1.0))
    assert (st.mean, st.variance) == (2.0, 2.0)
    with pytest.raises(ValueError):
        fin.empirical_count_stats([one], Disk(1.0))


def test_csv_outputs(tmp_path, fe1):
    samples = fin.sample_many(fe1, 3, seed=0)
    fin.write_points_csv(samples, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "sample,x,y" and len(lines) == 4
    fin.write_stats_csv(fin.empirical_count_stats(samples, fe1.domain), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "n_samples,mean_count,var_count,stderr_mean"

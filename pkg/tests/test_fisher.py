import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from squeezed_phase.fisher import (
    FISHER_COLUMNS,
    QuadratureError,
    conditional_fisher_lo_noise,
    conditional_fisher_state_prep,
    fisher_heterodyne,
    fisher_homodyne,
    fisher_homodyne_lossy,
    fisher_homodyne_lossy_max,
    fisher_report,
    qfi_lossy,
    qfi_squeezed_vacuum,
    snl_bound,
)
from squeezed_phase.gaussian import HALF_PI, SqueezedProbe, lossy_quadrature_variance, optimal_phase

QFI_1 = 26.3082328360164866292
QFI_101 = 27.4219701389423239046
HET_1 = 5.52439138216726291912
HET_101 = 5.67098039874204383246


def fd_fisher(r, theta, t=1.0, h=1e-5):
    """Fisher information of Normal(0, V(theta)) from a finite-difference score, integrated over x."""
    v = lossy_quadrature_variance(r, theta, t)
    vp = lossy_quadrature_variance(r, theta + h, t)
    vm = lossy_quadrature_variance(r, theta - h, t)

    def logpdf(x, var):
        return -0.5 * math.log(2 * math.pi * var) - x * x / (2 * var)

    def integrand(x):
        score = (logpdf(x, vp) - logpdf(x, vm)) / (2 * h)
        return score * score * math.exp(logpdf(x, v))

    s = math.sqrt(v)
    val, _ = integrate.quad(integrand, -40 * s, 40 * s, epsabs=0, epsrel=1e-12, limit=200)
    return val


class TestClosedForms:
    def test_qfi(self):
        assert qfi_squeezed_vacuum(0.0) == 0.0
        assert qfi_squeezed_vacuum(1.0) == pytest.approx(QFI_1, rel=1e-14)
        assert qfi_squeezed_vacuum(1.01) == pytest.approx(QFI_101, rel=1e-14)

    def test_homodyne(self):
        assert fisher_homodyne(1.0, 0.0) == 0.0
        assert fisher_homodyne(1.0, HALF_PI) == pytest.approx(0.0, abs=1e-12)
        assert fisher_homodyne(1.0, math.pi / 4) == pytest.approx(1.85869835029367106863, rel=1e-13)

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 1.01, 1.5, 2.0])
    def test_local_optimality(self, r):
        assert abs(fisher_homodyne(r, optimal_phase(r)) - qfi_squeezed_vacuum(r)) < 1e-10

    def test_heterodyne(self):
        assert fisher_heterodyne(0.0) == 0.0
        assert fisher_heterodyne(1.0) == pytest.approx(HET_1, rel=1e-14)
        assert fisher_heterodyne(1.01) == pytest.approx(HET_101, rel=1e-14)

    def test_loss_ratios(self):
        assert qfi_lossy(1.0, 1.0) == pytest.approx(QFI_1, rel=1e-14)
        assert qfi_lossy(1.0, 0.0) == 0.0
        assert qfi_lossy(1.0, 0.5) / QFI_1 == pytest.approx(0.147880961404083758, rel=1e-12)
        assert fisher_homodyne_lossy_max(1.0, 1.0) == pytest.approx(QFI_1, rel=1e-14)
        assert fisher_homodyne_lossy_max(1.0, 0.5) / QFI_1 == pytest.approx(0.104993585403506517, rel=1e-12)
        assert qfi_lossy(1.5, 0.9) >= fisher_homodyne_lossy_max(1.5, 0.9)

    @pytest.mark.parametrize("t", [-0.01, 1.01])
    def test_loss_rejects_bad_t(self, t):
        with pytest.raises(ValueError):
            qfi_lossy(1.0, t)
        with pytest.raises(ValueError):
            fisher_homodyne_lossy_max(1.0, t)

    def test_snl(self):
        assert snl_bound(1.0, 1) == 0.25
        assert snl_bound(math.sinh(1) ** 2, 1) == pytest.approx(0.181015415241577617, rel=1e-13)
        assert snl_bound(1.0, 100) == pytest.approx(0.0025, rel=1e-15)

    @given(st.floats(0.01, 3.0))
    def test_heterodyne_below_qfi(self, r):
        assert fisher_heterodyne(r) < qfi_squeezed_vacuum(r)

    @given(st.floats(0.05, 2.0), st.floats(0.01, 0.999))
    def test_lossy_ordering(self, r, t):
        assert fisher_homodyne_lossy_max(r, t) < qfi_lossy(r, t) <= qfi_squeezed_vacuum(r) * (1 + 1e-12)

    @given(st.floats(0.05, 2.0), st.floats(0.0, HALF_PI), st.floats(0.0, 1.0))
    def test_homodyne_bounded_by_qfi(self, r, theta, t):
        assert 0 <= fisher_homodyne_lossy(r, theta, t) <= qfi_lossy(r, t) * (1 + 1e-9) + 1e-12


class TestFiniteDifferenceOracle:
    @pytest.mark.parametrize("r,theta", [(0.5, 0.3), (1.0, 0.1), (1.0, 0.7), (1.5, 0.05)])
    def test_lossless_matches_closed_form(self, r, theta):
        assert fd_fisher(r, theta) == pytest.approx(fisher_homodyne(r, theta), rel=1e-6)

    @pytest.mark.parametrize("t", [0.95, 0.99])
    @pytest.mark.parametrize("r", [0.5, 1.0, 1.01])
    def test_lossy_maximum(self, r, t):
        grid = np.linspace(0.01, 0.5, 50)
        coarse = grid[np.argmax([fd_fisher(r, th, t) for th in grid])]
        fine = np.linspace(coarse - 0.01, coarse + 0.01, 201)
        best = max(fd_fisher(r, th, t) for th in fine)
        assert best == pytest.approx(fisher_homodyne_lossy_max(r, t), rel=1e-3)

    @given(st.floats(0.1, 2.0), st.floats(0.05, 1.0))
    def test_lossy_formula_at_lossless_limit(self, r, theta):
        assert fisher_homodyne_lossy(r, theta, 1.0) == pytest.approx(fisher_homodyne(r, theta), rel=1e-12)


class TestNoiseModels:
    def test_state_prep_degenerate(self):
        assert conditional_fisher_state_prep(1.0, 0.0, 0.2) == pytest.approx(fisher_homodyne(1.0, 0.2), rel=1e-14)

    def test_state_prep_monte_carlo(self):
        rng = np.random.default_rng(1)
        draws = 1.0 + 0.01 * rng.standard_normal(10 ** 6)
        theta = optimal_phase(1.0)
        mc = float(np.mean(fisher_homodyne(draws, theta)))
        value = conditional_fisher_state_prep(1.0, 0.01, theta)
        assert value == pytest.approx(mc, rel=1e-3)
        assert value == pytest.approx(QFI_1, rel=5e-3)

    def test_state_prep_peak_slightly_exceeds_qfi(self):
        grid = np.linspace(0.10, 0.17, 141)
        peak = max(conditional_fisher_state_prep(1.0, 0.02, th) for th in grid)
        assert QFI_1 < peak < 1.01 * QFI_1

    def test_lo_noise_zero(self):
        assert conditional_fisher_lo_noise(1.0, 0.0) == pytest.approx(QFI_1, rel=1e-12)

    @pytest.mark.parametrize("sigma", [0.05, 0.15])
    def test_lo_noise_monte_carlo(self, sigma):
        rng = np.random.default_rng(2)
        d = sigma * rng.standard_normal(10 ** 6)
        mc = float(np.mean(fisher_homodyne(1.0, optimal_phase(1.0) + d)))
        se = float(np.std(fisher_homodyne(1.0, optimal_phase(1.0) + d))) / 1e3
        assert abs(conditional_fisher_lo_noise(1.0, sigma) - mc) < 4 * se

    def test_lo_noise_decreasing_toward_half(self):
        sigmas = np.linspace(0.01, 0.15, 15)
        values = [conditional_fisher_lo_noise(1.0, s) for s in sigmas]
        assert np.all(np.diff(values) < 0)
        assert QFI_1 > conditional_fisher_lo_noise(1.0, 0.05) > values[-1]
        # about 0.64 of the QFI at 0.15 rad; half is reached near 0.35 rad
        assert 0.55 < values[-1] / QFI_1 < 0.7
        assert conditional_fisher_lo_noise(1.0, 0.346) / QFI_1 == pytest.approx(0.5, abs=0.01)

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            conditional_fisher_lo_noise(1.0, -0.1)
        with pytest.raises(ValueError):
            conditional_fisher_state_prep(1.0, -0.1, 0.2)

    def test_quadrature_error_is_runtime_error(self):
        assert issubclass(QuadratureError, RuntimeError)


class TestReport:
    def test_invariants(self, tmp_path):
        grid = np.linspace(0, HALF_PI, 91)
        rep = fisher_report(SqueezedProbe(1.0), grid, n=100)
        assert np.all(rep.cfi_homodyne >= 0) and np.all(rep.cfi_homodyne <= rep.qfi * (1 + 1e-12))
        assert rep.qcrb == pytest.approx(1 / (100 * QFI_1), rel=1e-14)
        assert rep.het_limit == pytest.approx(1 / (100 * HET_1), rel=1e-14)
        assert rep.snl == pytest.approx(1 / (400 * math.sinh(1) ** 2), rel=1e-14)
        path = tmp_path / "fisher.csv"
        rep.to_csv(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == FISHER_COLUMNS
        assert len(rows) == 92
        assert float(rows[11][1]) == rep.cfi_homodyne[10]

    def test_lossy_report_peaks_at_lossy_max(self):
        rep = fisher_report(SqueezedProbe(1.0, transmission=0.9), np.linspace(0, HALF_PI, 20001))
        assert rep.cfi_homodyne.max() == pytest.approx(fisher_homodyne_lossy_max(1.0, 0.9), rel=1e-6)

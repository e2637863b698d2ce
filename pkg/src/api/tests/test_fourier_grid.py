import numpy as np
import pytest

from calculations.chebyshev import cheb_nodes
from calculations.fourier_grid import (
    FourierGrid,
    build_coupling,
    default_delta_omega,
    default_grid,
    eps_F,
    gaussian_symbol,
    symbol_values,
)
from calculations.kernels import DerivedConstants, Matern
from calculations.quadrature import build_scheme
from helpers.errors import ResourceError, ShapeError


def test_grid_shape():
    grid = FourierGrid(3, 0.1, 2)
    assert grid.shape == (7, 7)
    assert grid.size == 49
    np.testing.assert_array_equal(grid.indices(), np.arange(-3, 4))
    assert grid.frequency_norm_sq()[3, 3] == 0.0
    assert grid.frequency_norm_sq()[0, 6] == pytest.approx(2 * (0.3 ** 2))


def test_grid_rejects_bad_sizes():
    with pytest.raises(ShapeError):
        FourierGrid(0, 0.1, 1)
    with pytest.raises(ShapeError):
        FourierGrid(4, 0.1, 4)


def test_coarse_spacing_warns(caplog):
    FourierGrid(4, 0.5, 1)
    assert "exceeds 1/8" in caplog.text


def test_symbol_values():
    assert symbol_values(2.0, np.array([0.0]), 1)[0] == pytest.approx(np.sqrt(2 * np.pi) * 2)
    rho = 1.0 / (2 * np.pi)
    assert symbol_values(rho, np.array([1.0]), 1)[0] == pytest.approx(np.exp(-0.5) / np.sqrt(2 * np.pi))


def test_gaussian_symbol_is_radial():
    symbol = gaussian_symbol(0.4, FourierGrid(5, 0.1, 2))
    np.testing.assert_array_equal(symbol, symbol.T)
    assert symbol.argmax() == np.ravel_multi_index((5, 5), symbol.shape)


def test_coupling_is_symmetric():
    scheme = build_scheme(Matern(1.5), -4.0, 2.0, 6, 2)
    tensor = build_coupling(scheme, cheb_nodes(0.2, 0.5, 3), FourierGrid(6, 0.1, 2)).values
    assert tensor.shape == (4, 4, 13, 13)
    np.testing.assert_array_equal(tensor, tensor.transpose(1, 0, 2, 3))


def test_coupling_memory_cap():
    scheme = build_scheme(Matern(1.5), -4.0, 2.0, 6, 1)
    with pytest.raises(ResourceError):
        build_coupling(scheme, cheb_nodes(0.2, 0.5, 3), FourierGrid(6, 0.1, 1), memory_cap=64)


def test_eps_F_aliasing_dominates():
    consts = DerivedConstants(kappa=2.0, chi_min=1.0, chi_max=1.0, rho_min=1.0, rho_max=2.0, lam=2.0)
    value = eps_F(FourierGrid(10, 0.125, 1), consts)
    assert value == pytest.approx(2 * np.exp(-(2.5 * np.pi) ** 2) + np.exp(-1.0))
    assert value == pytest.approx(0.3679, abs=1e-4)


def test_eps_F_truncation_vanishes_with_M():
    consts = DerivedConstants(kappa=2.0, chi_min=1.0, chi_max=1.0, rho_min=0.1, rho_max=0.2, lam=2.0)
    assert eps_F(FourierGrid(40, 0.125, 1), consts) < eps_F(FourierGrid(10, 0.125, 1), consts)


def test_default_delta_omega():
    assert default_delta_omega(1e-6, 1.0) == pytest.approx(0.25 / np.sqrt(np.log(1e6)))
    assert default_delta_omega(1e-6, 1.0) == pytest.approx(0.06726, abs=1e-5)
    assert default_delta_omega(1e-6, 0.01) == 0.125


def _constants(rho_max):
    return DerivedConstants(kappa=1.0, chi_min=1.0, chi_max=1.0, rho_min=rho_max, rho_max=rho_max, lam=1.0)


def test_default_grid_spacing_rule():
    grid = default_grid(1e-6, _constants(1.0), 30, 2)
    assert (grid.M, grid.dim) == (30, 2)
    assert grid.delta_omega == pytest.approx(0.06726, abs=1e-5)

    wide = default_grid(1e-6, _constants(5.0), 30, 1)
    assert wide.delta_omega == pytest.approx(0.25 / (5.0 * np.sqrt(np.log(1e6))))

    assert default_grid(1e-6, _constants(0.01), 30, 1).delta_omega == 0.125


def test_default_grid_bounds_the_aliasing_term():
    for rho_max in (0.05, 0.5, 3.0):
        grid = default_grid(1e-8, _constants(rho_max), 10, 1)
        assert np.exp(-(1.0 / (4.0 * rho_max * grid.delta_omega)) ** 2) <= 1e-8 * (1 + 1e-9)

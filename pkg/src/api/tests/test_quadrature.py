import numpy as np
import pytest
from scipy.integrate import quad

from calculations.kernels import Matern, SquaredExponential, matern_phi
from calculations.quadrature import build_scheme, chi_u_v, default_t_range, matern_scheme, reconstruct_phi
from helpers.errors import InvalidSchemeError, InvalidToleranceError


def test_chi_u_v_values():
    chi, u, v = chi_u_v(1.0, 0.0, 1)
    assert chi == pytest.approx(1.0)
    assert u == pytest.approx(np.exp(-1.0))
    assert v == pytest.approx(np.exp(-1.0))

    chi, u, v = chi_u_v(4.0, 0.0, 1)
    assert chi == pytest.approx(0.5)
    assert u == pytest.approx(np.exp(-1.0) / 6.0)
    assert v == pytest.approx(2.0 * np.exp(-1.0) / 6.0)


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.5])
def test_u_integrates_to_one(nu):
    total, _ = quad(lambda t: chi_u_v(nu, t, 1)[1], -60.0, 5.0, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_trapezoid_weight_pattern():
    scheme = build_scheme(Matern(1.0), 0.0, 1.0, 2, 1)
    np.testing.assert_allclose(scheme.t_nodes, [0.0, 0.5, 1.0])
    _, _, v = chi_u_v(1.0, scheme.t_nodes, 1)
    np.testing.assert_allclose(scheme.v_weights, [v[0] / 4, v[1] / 2, v[2] / 4])
    assert scheme.delta_t == 0.5
    assert scheme.n_t == 2


def test_squared_exponential_scheme_has_one_node():
    scheme = build_scheme(SquaredExponential(), 0.0, 0.0, 0, 2)
    np.testing.assert_array_equal(scheme.t_nodes, [0.0])
    np.testing.assert_array_equal(scheme.v_weights, [1.0])
    assert scheme.is_squared_exponential


def test_scheme_rejects_bad_node_counts():
    with pytest.raises(InvalidSchemeError):
        build_scheme(Matern(1.5), -1.0, 1.0, 0, 1)
    with pytest.raises(InvalidSchemeError):
        build_scheme(SquaredExponential(), 0.0, 0.0, 3, 1)
    with pytest.raises(InvalidSchemeError):
        build_scheme(Matern(1.5), 1.0, -1.0, 4, 1)


def test_default_t_range():
    t_min, t_max, n_t = default_t_range(1e-6, 1.5)
    assert t_min == pytest.approx(-8.5437, abs=1e-4)
    assert t_max == pytest.approx(3.3190, abs=1e-4)
    assert n_t == 24


def test_default_t_range_rejects_bad_tolerance():
    with pytest.raises(InvalidToleranceError):
        default_t_range(0.0, 1.5)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_reconstruct_phi_matches_closed_form(nu):
    scheme = matern_scheme(nu, 1e-8, 1)
    radii = np.linspace(0.0, 5.0, 50)
    assert np.abs(reconstruct_phi(scheme, nu, radii) - matern_phi(nu, radii)).max() <= 1e-6


def test_reconstruct_phi_at_zero_and_examples():
    scheme = matern_scheme(1.5, 1e-8, 1)
    assert reconstruct_phi(scheme, 1.5, 0.0) == pytest.approx(1.0, abs=1e-6)
    assert reconstruct_phi(scheme, 1.5, 2.0) == pytest.approx(0.13973, abs=1e-5)
    assert reconstruct_phi(matern_scheme(0.5, 1e-8, 1), 0.5, 1.0) == pytest.approx(np.exp(-1.0), abs=1e-6)


def test_reconstruct_phi_checks_smoothness():
    with pytest.raises(InvalidSchemeError):
        reconstruct_phi(matern_scheme(1.5, 1e-6, 1), 2.5, 1.0)


def _reconstruction_error(nu, t_min, t_max, n_t, radii):
    scheme = build_scheme(Matern(nu), t_min, t_max, n_t, 1)
    return float(np.abs(reconstruct_phi(scheme, nu, radii) - matern_phi(nu, radii)).max())


def test_error_falls_geometrically_as_nodes_double():
    nu = 1.5
    t_min, t_max, _ = default_t_range(1e-12, nu)
    radii = np.linspace(0.0, 3.0, 16)
    errors = [_reconstruction_error(nu, t_min, t_max, n_t, radii) for n_t in (12, 24, 48, 96)]
    for coarse, fine in zip(errors, errors[1:]):
        if coarse > 1e-10:
            assert fine <= coarse / 4.0
    assert errors[-1] <= 1e-10


def test_shrinking_t_max_increases_error():
    nu = 1.5
    errors = [
        _reconstruction_error(nu, -20.0, t_max, int(np.ceil((t_max + 20.0) / 0.05)), np.zeros(1))
        for t_max in (3.0, 2.5, 2.0, 1.5)
    ]
    assert all(later > earlier for earlier, later in zip(errors, errors[1:]))


def test_raising_t_min_increases_error():
    nu = 1.5
    errors = [
        _reconstruction_error(nu, t_min, 4.5, int(np.ceil((4.5 - t_min) / 0.05)), np.zeros(1))
        for t_min in (-10.0, -8.0, -6.0, -4.0)
    ]
    assert all(later > earlier for earlier, later in zip(errors, errors[1:]))
    # the missing lower tail is about e^(nu t_min) / (nu Gamma(nu))
    assert errors[0] == pytest.approx(np.exp(-15.0) / (1.5 * 0.886226925), rel=0.05)

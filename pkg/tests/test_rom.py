"""Latent linear models: assembly routes, stepping, environment wrapper."""

import numpy as np
import pytest

from stabl.environments import make_allen_cahn, make_toy2d
from stabl.manifold import arnoldi_unstable_basis, unstable_coder
from stabl.rom import (
    assemble_rom_adjoint,
    assemble_rom_sysid,
    rom_as_environment,
    rom_step,
    route_deviation,
)


@pytest.fixture
def toy2d_coder(toy2d, toy2d_basis):
    return unstable_coder(toy2d, toy2d_basis)


def test_toy2d_adjoint_rom_exact(toy2d, toy2d_coder):
    model = assemble_rom_adjoint(toy2d, toy2d_coder)
    assert model.nr == 1 and model.nu == 1
    assert model.jx[0, 0] == pytest.approx(1.1, abs=1e-12)
    assert model.ju[0, 0] == pytest.approx(1.0 / np.sqrt(5), abs=1e-12)


def test_sysid_route_matches_adjoint_on_linear_env(toy2d, toy2d_coder):
    sysid = assemble_rom_sysid(toy2d, toy2d_coder)
    adjoint = assemble_rom_adjoint(toy2d, toy2d_coder)
    assert np.allclose(sysid.jx, adjoint.jx, atol=1e-9)
    assert np.allclose(sysid.ju, adjoint.ju, atol=1e-9)
    assert route_deviation(toy2d, toy2d_coder) <= 1e-12


def test_routes_agree_on_nonlinear_env():
    env = make_allen_cahn(32)
    coder = unstable_coder(env, arnoldi_unstable_basis(env))
    assert route_deviation(env, coder, delta=1e-6) <= 1e-4


def test_sysid_probe_size_validation(toy2d, toy2d_coder):
    with pytest.raises(ValueError):
        assemble_rom_sysid(toy2d, toy2d_coder, delta=0.0)
    with pytest.raises(ValueError):
        assemble_rom_sysid(toy2d, toy2d_coder, delta=-1e-6)


def test_rom_step_is_affine_map(toy2d, toy2d_coder):
    model = assemble_rom_adjoint(toy2d, toy2d_coder)
    z, u = np.array([0.3]), np.array([-0.2])
    expected = model.jx @ z + model.ju @ u
    assert np.allclose(rom_step(model, z, u), expected, atol=1e-15)
    # Latent step of an encoded state matches encoding the full step for a
    # linear environment with an invariant basis.
    x = toy2d_coder.decode(z)
    full = toy2d_coder.encode(toy2d.step(x, toy2d.ubar + u))
    assert np.allclose(rom_step(model, z, u), full, atol=1e-12)


def test_rom_as_environment_wraps_model(toy2d, toy2d_coder):
    model = assemble_rom_adjoint(toy2d, toy2d_coder)
    rom_env = rom_as_environment(model, tau=toy2d.tau)
    assert rom_env.nx == 1 and rom_env.nu == 1
    assert rom_env.nr_expected == 1
    assert np.array_equal(rom_env.xbar, np.zeros(1))
    assert np.array_equal(rom_env.ubar, np.zeros(1))
    z, u = np.array([0.5]), np.array([0.1])
    assert np.allclose(rom_env.step(z, u), rom_step(model, z, u), atol=1e-15)
    v = np.array([1.0])
    assert np.allclose(rom_env.jvp_state(z, u, v), model.jx @ v, atol=1e-15)
    assert np.allclose(rom_env.vjp_control(z, u, v), model.ju.T @ v, atol=1e-15)

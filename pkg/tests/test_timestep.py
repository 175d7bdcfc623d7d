import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cached_disc
from dodstab.solver import Discretization
from dodstab.timestep import (
    SHU_OSHER,
    BlowUpError,
    Scheme,
    compute_dt,
    integrate,
    n_steps,
    scheme_for_degree,
    step,
    step_sizes,
)
from dodstab.verification import Constant
from oracles import shu_osher_ssp3


def amplification(scheme, z):
    return step(lambda t, u: z * u, np.array([1.0 + 0j]), 0.0, 1.0, scheme)[0]


def test_compute_dt_examples():
    assert compute_dt(1, 0.25, 2.0) == pytest.approx(0.0166667, abs=1e-7)
    assert compute_dt(2, 0.25, 2.0) == pytest.approx(0.01, rel=1e-14)
    assert compute_dt(1, 0.25, 2.0, cfl=0.0) == 0.0
    with pytest.raises(ValueError):
        compute_dt(1, 0.0, 2.0)


def test_scheme_for_degree():
    assert [scheme_for_degree(p) for p in (1, 2, 3)] == [Scheme.SSP2, Scheme.SSP3, Scheme.SSP4]
    assert all(scheme_for_degree(p).order == p + 1 for p in (1, 2, 3))


@pytest.mark.parametrize("z", [-0.3, 0.2 + 0.5j, -1.1 + 0.2j])
def test_amplification_polynomials(z):
    assert amplification(Scheme.SSP1, z) == pytest.approx(1 + z, abs=1e-15)
    assert amplification(Scheme.SSP2, z) == pytest.approx(1 + z + z**2 / 2, abs=1e-15)
    assert amplification(Scheme.SSP3, z) == pytest.approx(1 + z + z**2 / 2 + z**3 / 6, abs=1e-15)
    taylor4 = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
    assert amplification(Scheme.RK4, z) == pytest.approx(taylor4, abs=1e-15)


def test_ssp4_is_fourth_order():
    # error against exp(z) falls like z^5
    errs = [abs(amplification(Scheme.SSP4, z) - np.exp(z)) for z in (-0.1, -0.05)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(5.0, abs=0.2)


def test_shu_osher_coefficients_convex():
    for scheme, (alpha, beta, _) in SHU_OSHER.items():
        for a, b in zip(alpha, beta):
            assert min(a) >= 0.0 and min(b) >= 0.0
            assert sum(a) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("stabilize", [True, False])
def test_ssp3_matches_independent_driver(stabilize, rng):
    disc = cached_disc(10, 2, 45.0)
    d = Discretization(disc.mesh, 2, disc.beta, boundary=Constant(0.7), stabilize=stabilize)
    dt = compute_dt(2, disc.mesh.h, 2.0)
    rhs = d.matrix_free_rhs(dt)
    u = rng.standard_normal(d.shape).ravel()
    np.testing.assert_allclose(step(rhs, u, 0.1, dt, Scheme.SSP3), shu_osher_ssp3(rhs, u, 0.1, dt),
                               atol=1e-14 * np.abs(u).max())


def test_zero_rhs_keeps_state(rng):
    u = rng.standard_normal(7)
    for scheme in Scheme:
        # convex stage combinations round at the last bit
        np.testing.assert_allclose(step(lambda t, v: np.zeros_like(v), u, 0.0, 0.1, scheme), u,
                                   rtol=1e-14, atol=0.0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_step_is_linear(p, rng):
    disc = cached_disc(10, p, 25.0)
    d = Discretization(disc.mesh, p, disc.beta, boundary=Constant(0.0))
    dt = compute_dt(p, disc.mesh.h, 2.0)
    rhs = d.make_rhs(dt)
    u, v = rng.standard_normal((2, d.shape[0] * d.shape[1]))
    a, b = 1.7, -0.4
    s = scheme_for_degree(p)
    lhs = step(rhs, a * u + b * v, 0.0, dt, s)
    np.testing.assert_allclose(lhs, a * step(rhs, u, 0.0, dt, s) + b * step(rhs, v, 0.0, dt, s),
                               atol=1e-12 * np.abs(lhs).max())


def test_step_clipping_examples():
    dt = 0.0123
    assert step_sizes(3 * dt, dt) == [dt, dt, dt]
    assert step_sizes(1e-15, dt) == [1e-15]
    sizes = step_sizes(2.5 * dt, dt)
    assert len(sizes) == 3
    assert sizes[-1] == pytest.approx(0.5 * dt, rel=1e-12)
    assert n_steps(0.0, dt) == 0
    with pytest.raises(ValueError):
        step_sizes(1.0, 0.0)
    with pytest.raises(ValueError):
        step_sizes(-1.0, 0.1)


@settings(max_examples=200)
@given(st.floats(0.0, 10.0), st.floats(1e-3, 1.0))
def test_step_sizes_sum_to_T(T, dt):
    sizes = step_sizes(T, dt)
    assert math.fsum(sizes) == pytest.approx(T, rel=1e-12, abs=1e-15)
    assert all(0.0 < s <= dt * (1 + 1e-12) for s in sizes)


def test_integrate_rebuilds_rhs_for_clipped_step():
    built = []

    def make_rhs(h):
        built.append(h)
        return lambda t, u: -u

    log = []
    integrate(make_rhs, np.ones(2), 0.25, 0.1, Scheme.SSP2, callback=lambda info: log.append(info.t))
    assert built == [0.1, pytest.approx(0.05)]
    assert log[0] == 0.0 and log[-1] == 0.25 and len(log) == 4


def test_blow_up_detected():
    with pytest.raises(BlowUpError) as err:
        integrate(lambda h: (lambda t, u: 1e3 * u), np.ones(3), 1.0, 0.1, Scheme.SSP1)
    assert err.value.step >= 1
    with pytest.raises(BlowUpError):
        integrate(lambda h: (lambda t, u: u * np.nan), np.ones(3), 1.0, 0.1, Scheme.SSP1)

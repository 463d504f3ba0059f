"""System specs: validation, reference vector field, eigenstructure, modes."""

import math

import numpy as np
import pytest

from conftest import sin_forcing
from resokit import expr as ex
from resokit import forcing as fc
from resokit import system as sy
from resokit.prng import SplitMix64

PI = math.pi


def test_validate_scalar_resonant():
    spec = sy.SystemSpec(
        1, (2.0,), sy.CyclicCoupling((ex.Const(0.0),)), (sin_forcing(2),)
    )
    rep = sy.validate_spec(spec)
    assert rep.ok
    assert rep.resonant == [True]
    assert rep.n_int == [2]


def test_validate_length_mismatch():
    spec = sy.SystemSpec(
        2, (1.0,), sy.CyclicCoupling((ex.Const(0.0),) * 2), (sin_forcing(1),) * 2
    )
    rep = sy.validate_spec(spec)
    assert not rep.ok
    assert any("frequencies" in p for p in rep.problems)


def test_validate_resonance_tolerance():
    spec = sy.SystemSpec(
        1,
        (2.0 + 1e-12,),
        sy.CyclicCoupling((ex.Const(0.0),)),
        (sin_forcing(2),),
    )
    rep = sy.validate_spec(spec)
    assert rep.resonant == [True]
    loose = sy.SystemSpec(
        1, (2.0 + 1e-6,), sy.CyclicCoupling((ex.Const(0.0),)), (sin_forcing(2),)
    )
    assert sy.validate_spec(loose).resonant == [False]


def test_vector_field_harmonic():
    spec = sy.SystemSpec(
        1, (1.0,), sy.CyclicCoupling((ex.Const(0.0),)), (fc.TrigPoly(),)
    )
    dx, dv = sy.vector_field(spec, 0.0, np.array([1.0]), np.array([0.0]))
    assert dx == pytest.approx([0.0])
    assert dv == pytest.approx([-1.0])


def test_vector_field_cyclic_feeds_next_component():
    # h_j sees x_{j+1}: dv_1 = -tanh(x_2); dv_2 = -n^2 x_2 - tanh(x_1)
    spec = sy.SystemSpec(
        2,
        (1.0, 1.0),
        sy.CyclicCoupling((ex.Tanh(), ex.Tanh())),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    dx, dv = sy.vector_field(spec, 0.0, np.array([0.0, 5.0]), np.zeros(2))
    assert dv[0] == pytest.approx(-math.tanh(5.0), abs=1e-15)
    assert dv[1] == pytest.approx(-5.0 - math.tanh(0.0), abs=1e-15)


def test_vector_field_radial_norm_argument():
    spec = sy.SystemSpec(
        2,
        (1.0, 1.0),
        sy.RadialCoupling((ex.Tanh(), ex.Tanh())),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    x = np.array([3.0, 4.0])
    dx, dv = sy.vector_field(spec, 0.0, x, np.zeros(2))
    expected = -x - math.tanh(5.0)
    assert dv == pytest.approx(expected, abs=1e-14)


def test_vector_field_general_separable():
    terms = (
        (sy.VarTerm(0, ex.Sin()), sy.VarTerm(1, ex.Scale(2.0, ex.Cos()))),
        (sy.VarTerm(0, ex.Const(0.5)),),
    )
    spec = sy.SystemSpec(
        2,
        (1.0, 2.0),
        sy.GeneralCoupling(terms),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    x = np.array([0.3, -0.7])
    dx, dv = sy.vector_field(spec, 0.0, x, np.zeros(2))
    h1 = math.sin(0.3) + 2.0 * math.cos(-0.7)
    assert dv[0] == pytest.approx(-x[0] - h1, abs=1e-14)
    assert dv[1] == pytest.approx(-4.0 * x[1] - 0.5, abs=1e-14)


def test_cyclic_d1_is_self_coupling():
    spec = sy.SystemSpec(
        1, (1.0,), sy.CyclicCoupling((ex.Tanh(),)), (fc.TrigPoly(),)
    )
    _, dv = sy.vector_field(spec, 0.0, np.array([2.0]), np.zeros(1))
    assert dv[0] == pytest.approx(-2.0 - math.tanh(2.0), abs=1e-15)


def test_coupling_values_matches_reference():
    terms = ((sy.VarTerm(1, ex.Atan()), sy.VarTerm(0, ex.Tanh(0.5, 0.1))),)
    spec = sy.SystemSpec(
        2,
        (1.0, 1.0),
        sy.GeneralCoupling((terms[0], (sy.VarTerm(0, ex.Sin()),))),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    xs = np.array([[0.1, -0.4], [2.0, 3.0], [-1.0, 0.0]])
    for j in range(2):
        vals = sy.coupling_values(spec, j, xs)
        for row, v in zip(xs, vals):
            assert v == pytest.approx(
                sum(
                    ex.evaluate(t.expr, row[t.var])
                    for t in spec.coupling.terms[j]
                ),
                abs=1e-14,
            )


def test_component_range_sums_terms():
    terms = ((sy.VarTerm(0, ex.Tanh()), sy.VarTerm(1, ex.Scale(0.5, ex.Sin()))),)
    spec = sy.SystemSpec(
        2,
        (1.0, 1.0),
        sy.GeneralCoupling((terms[0], (sy.VarTerm(0, ex.Const(1.0)),))),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    r = sy.component_range(spec, 0)
    assert (r.lower, r.upper) == (-1.5, 1.5)
    assert sy.component_range(spec, 1).span == 0.0


# --- Jacobi eigensolver -------------------------------------------------------


def test_jacobi_diagonal():
    dec = sy.jacobi_eigen(np.diag([1.0, 4.0]))
    assert dec.eigenvalues == pytest.approx([1.0, 4.0])
    assert np.abs(dec.q) == pytest.approx(np.eye(2))
    assert dec.resonant_modes == ((0, 1), (1, 2))


def test_jacobi_coupled_pair():
    dec = sy.jacobi_eigen([[2.5, 1.5], [1.5, 2.5]])
    assert dec.eigenvalues == pytest.approx([1.0, 4.0], abs=1e-12)
    # lambda = 4 eigenvector is (1, 1)/sqrt(2) with the sign convention
    assert dec.q[:, 1] == pytest.approx([1 / math.sqrt(2)] * 2, abs=1e-12)


def test_jacobi_partial_resonance():
    dec = sy.jacobi_eigen([[2.0, 1.0], [1.0, 2.0]])
    assert dec.eigenvalues == pytest.approx([1.0, 3.0], abs=1e-12)
    assert dec.resonant_modes == ((0, 1),)


def test_jacobi_rejects_nonsymmetric():
    with pytest.raises(sy.NotSymmetricError):
        sy.jacobi_eigen([[1.0, 2.0], [0.0, 1.0]])


def test_jacobi_against_numpy_oracle():
    rng = SplitMix64(60601)
    for d in (2, 3, 5, 8):
        for _ in range(8):
            m = rng.uniforms(d * d, -3.0, 3.0).reshape(d, d)
            a = (m + m.T) / 2.0
            dec = sy.jacobi_eigen(a)
            expected = np.linalg.eigvalsh(a)
            assert dec.eigenvalues == pytest.approx(expected, abs=1e-10)
            scale = max(1.0, float(np.max(np.abs(a))))
            assert np.max(np.abs(dec.q.T @ dec.q - np.eye(d))) <= 1e-10
            assert (
                np.max(np.abs(dec.q.T @ a @ dec.q - np.diag(dec.eigenvalues)))
                <= 1e-10 * scale
            )
            # deterministic sign convention
            for k in range(d):
                col = dec.q[:, k]
                nz = np.nonzero(np.abs(col) > 1e-12)[0]
                assert col[nz[0]] > 0.0


def test_eigen_residual_for_resonant_modes():
    rng = SplitMix64(12)
    base = np.diag([1.0, 4.0, 9.0])
    for _ in range(10):
        m = rng.uniforms(9, -1.0, 1.0).reshape(3, 3)
        q, _ = np.linalg.qr(m + np.eye(3))
        a = q @ base @ q.T
        a = (a + a.T) / 2.0
        dec = sy.jacobi_eigen(a)
        assert len(dec.resonant_modes) == 3
        for idx, n in dec.resonant_modes:
            vec = dec.q[:, idx]
            assert np.linalg.norm(a @ vec - n * n * vec) <= 1e-9


# --- periodic modes ------------------------------------------------------------


def test_periodic_mode_diag():
    dec = sy.jacobi_eigen(np.diag([1.0, 4.0]))
    mode = sy.periodic_mode(dec, 1, phi=0.0, c=1.0)
    assert mode.n == 2
    ts = np.linspace(0.0, 2 * PI, 7)
    vals = mode.value(ts)
    assert vals[:, 0] == pytest.approx(np.zeros(7), abs=1e-15)
    assert vals[:, 1] == pytest.approx(np.sin(2 * ts), abs=1e-12)


def test_periodic_mode_initial_data_and_scaling():
    dec = sy.jacobi_eigen([[2.5, 1.5], [1.5, 2.5]])
    m1 = sy.periodic_mode(dec, 1, phi=0.7, c=1.0)
    m2 = sy.periodic_mode(dec, 1, phi=0.7, c=2.0)
    assert m1.v0 == pytest.approx(math.sin(0.7) * m1.q)
    assert m1.v0_prime == pytest.approx(2.0 * math.cos(0.7) * m1.q)
    assert m2.v0 == pytest.approx(2.0 * m1.v0)
    ts = np.linspace(0.0, 2 * PI, 513)
    int1 = np.trapezoid(np.linalg.norm(m1.value(ts), axis=1), ts)
    int2 = np.trapezoid(np.linalg.norm(m2.value(ts), axis=1), ts)
    assert int2 == pytest.approx(2.0 * int1, rel=1e-12)


def test_periodic_mode_residual():
    # |v'' + A v| at 1000 sample times, v'' by second-order central
    # differences with step 1e-4; amplitude kept within the truncation
    # budget n^4 h^2 c / 12 <= 1e-8
    from conftest import mode_residual_fd

    a = np.array([[2.5, 1.5], [1.5, 2.5]])
    dec = sy.jacobi_eigen(a)
    mode = sy.periodic_mode(dec, 1, phi=0.3, c=0.5)
    assert mode_residual_fd(a, mode) <= 1e-8


def test_periodic_mode_rejects_nonresonant():
    dec = sy.jacobi_eigen([[2.0, 1.0], [1.0, 2.0]])
    with pytest.raises(sy.NonResonantModeError):
        sy.periodic_mode(dec, 1)
    with pytest.raises(sy.NonResonantModeError):
        sy.periodic_mode(dec, 99)


# --- matrix validation and JSON -------------------------------------------------


def test_validate_matrix_spec(matrix_spec):
    rep = sy.validate_spec(matrix_spec)
    assert rep.ok
    assert rep.resonant == [True, True]
    assert rep.n_int == [1, 2]


def test_validate_matrix_rejects_asymmetric():
    bad = sy.MatrixSpec(
        ((1.0, 0.5), (0.0, 1.0)),
        ((), ()),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    rep = sy.validate_spec(bad)
    assert not rep.ok


def test_validate_matrix_rejects_indefinite():
    bad = sy.MatrixSpec(
        ((1.0, 0.0), (0.0, -2.0)),
        ((), ()),
        (fc.TrigPoly(), fc.TrigPoly()),
    )
    rep = sy.validate_spec(bad)
    assert any("positive definite" in p for p in rep.problems)


def test_system_json_round_trip(cyclic3_spec, radial2_spec, matrix_spec):
    for spec in (cyclic3_spec, radial2_spec, matrix_spec):
        doc = sy.system_to_dict(spec)
        back = sy.system_from_dict(doc)
        assert back == spec
        assert sy.system_to_dict(back) == doc


def test_system_json_general_coupling():
    terms = (
        (sy.VarTerm(1, ex.Atan()),),
        (sy.VarTerm(0, ex.Scale(0.25, ex.Tanh())),),
    )
    spec = sy.SystemSpec(
        2, (1.0, 2.0), sy.GeneralCoupling(terms), (sin_forcing(1), sin_forcing(2))
    )
    doc = sy.system_to_dict(spec)
    assert doc["coupling"]["kind"] == "general"
    assert doc["coupling"]["terms"][0][0]["var"] == 2  # 1-based in JSON
    assert sy.system_from_dict(doc) == spec

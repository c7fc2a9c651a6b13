import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ekdisp.dispersion import symbol_H
from ekdisp.resonance import (
    BlockResolution,
    DegenerateInputError,
    DyadicBlock,
    EmptyBlockError,
    PhaseSpec,
    SymbolUnderTest,
    block_norm,
    classify_case,
    dyadic_ladder,
    eta_perp,
    fit_exponents,
    parallel_resonance_check,
    parallel_resonance_leading_order,
    phase,
    phase_gradient,
    predicted_exponents,
    resonant_scan,
)

COARSE = BlockResolution(radial=60, polar=(60, 60, 60))
vec = arrays(np.float64, (3,), elements=st.floats(-5, 5))
E1 = np.array([1.0, 0.0, 0.0])


def test_phase_closed_form_values():
    assert phase(PhaseSpec(-1, -1), 2 * E1, E1) == pytest.approx(2 * math.sqrt(6) - 2 * math.sqrt(3), rel=1e-14)
    assert phase(PhaseSpec(1, -1), E1, 0.5 * E1) == pytest.approx(math.sqrt(3), rel=1e-14)
    assert phase(PhaseSpec(-1, -1), np.zeros(3), np.zeros(3)) == 0.0


def test_phase_labels():
    spec = PhaseSpec.from_label("-+")
    assert (spec.s1, spec.s2, spec.label) == (-1, 1, "-+")
    with pytest.raises(ValueError):
        PhaseSpec.from_label("+")


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    xi = rng.uniform(-2, 2, (1000, 3))
    eta = rng.uniform(-2, 2, (1000, 3))
    h = 1e-6
    for label in ("++", "+-", "-+", "--"):
        spec = PhaseSpec.from_label(label)
        grad = phase_gradient(spec, xi, eta)
        fd = np.stack(
            [(phase(spec, xi, eta + h * e) - phase(spec, xi, eta - h * e)) / (2 * h) for e in np.eye(3)], axis=-1
        )
        assert np.max(np.abs(grad - fd)) < 1e-6


@given(vec, vec)
@settings(max_examples=100, deadline=None)
def test_symmetric_phases_are_symmetric(xi, eta):
    for label in ("++", "--"):
        spec = PhaseSpec.from_label(label)
        assert phase(spec, xi, eta) == pytest.approx(phase(spec, xi, xi - eta), abs=1e-12)


@given(vec, vec)
@settings(max_examples=100, deadline=None)
def test_plus_plus_phase_dominates(xi, eta):
    value = phase(PhaseSpec(1, 1), xi, eta)
    assert value >= symbol_H(np.linalg.norm(xi)) - 1e-12


@pytest.mark.parametrize(
    "eta, case",
    [
        ((1.05, 0, 0), 1),
        ((3.0, 0, 0), 2),
        ((-1.0, 0, 0), 3),
        ((0.05, 1e-4, 0), 4),
        ((0.05, 0.04, 0), 5),
    ],
)
def test_classify_examples(eta, case):
    xi = E1 if case != 4 and case != 5 else 0.1 * E1
    assert classify_case(xi, np.array(eta)) == case


def test_classify_degenerate():
    with pytest.raises(DegenerateInputError):
        classify_case(E1, E1)


@given(
    st.floats(1e-3, 0.4),
    st.floats(0.2, 0.8),
    st.floats(0.2, 1.0),
    st.floats(0, 2 * math.pi),
)
@settings(max_examples=300, deadline=None)
def test_case_five_is_spacetime_nonresonant(radius, along, across, angle):
    xi = radius * E1
    eta = radius * np.array([along, across * math.cos(angle), across * math.sin(angle)])
    assume(classify_case(xi, eta) == 5)
    spec = PhaseSpec(1, -1)
    both = max(abs(phase(spec, xi, eta)), np.linalg.norm(phase_gradient(spec, xi, eta)))
    smallest = min(np.linalg.norm(v) for v in (xi, eta, xi - eta))
    assert both >= 0.25 * smallest


def test_eta_perp():
    assert eta_perp(E1, np.array([3.0, 4.0, 0.0])) == pytest.approx(4.0)


def test_parallel_reference_formula_error_tends_to_epsilon():
    # the reference cubic omits the (1 - eps) factor
    for eps in (0.1, 0.05):
        _, _, rel = parallel_resonance_check(eps, 1e-3)
        assert rel == pytest.approx(eps, rel=1e-3)
        _, _, rel_full = parallel_resonance_leading_order(eps, 1e-3)
        assert rel_full < 1e-4
    with pytest.raises(ValueError):
        parallel_resonance_check(0.5, 0.01)


def test_scan_plus_plus_has_no_resonances():
    rep = resonant_scan(PhaseSpec(1, 1), 1e-2, samples=2**12, mode="sum_sphere")
    assert rep.min_product_ratio > 0.3
    with pytest.raises(ValueError):
        resonant_scan(PhaseSpec(1, 1), 1e-2, samples=10)


def test_polished_minimizer_sits_at_half_xi():
    rep = resonant_scan(PhaseSpec(-1, -1), 1.0, samples=2**12, polish=True)
    assert np.allclose(rep.grad_argmin_eta, 0.5 * E1, atol=1e-6)


def test_block_admissibility():
    assert DyadicBlock(0.1, 1.0, 1.0).admissible()
    assert not DyadicBlock(4.0, 1.0, 1.0).admissible()
    with pytest.raises(EmptyBlockError):
        block_norm(SymbolUnderTest("unit"), DyadicBlock(4.0, 1.0, 1.0), eta_resolution=COARSE)


def test_zero_symbol_has_zero_norm():
    value = block_norm(SymbolUnderTest("B3", bj="zero"), DyadicBlock(0.1, 0.1, 0.1), xi_samples=2, eta_resolution=COARSE)
    assert value == 0.0


def test_fractional_order_interpolates():
    sym = SymbolUnderTest("unit")
    blk = DyadicBlock(0.1, 0.1, 0.1)
    kw = dict(xi_samples=2, eta_resolution=COARSE)
    n0, n1, half = (block_norm(sym, blk, s, **kw) for s in (0.0, 1.0, 0.5))
    assert half == pytest.approx(math.sqrt(n0 * n1), rel=1e-12)
    with pytest.raises(ValueError):
        block_norm(sym, blk, 2.5, **kw)


def test_unit_symbol_volume_scaling():
    ladder = dyadic_ladder("b", [2.0**-k for k in (6, 5, 4, 3)], {"a": 2.0**-7, "c": 2.0**-5})
    ladder = [DyadicBlock(b.a, b.b, b.b) for b in ladder]
    fit = fit_exponents(SymbolUnderTest("unit"), ladder, s=1.0, xi_samples=2, eta_resolution=COARSE)
    assert fit.exponent_l == pytest.approx(predicted_exponents("unit", True, 1.0)[0], abs=0.1)


def test_fit_needs_four_blocks():
    ladder = [DyadicBlock(0.1, b, b) for b in (0.1, 0.2, 0.4)]
    with pytest.raises(ValueError, match="4"):
        fit_exponents(SymbolUnderTest("unit"), ladder, xi_samples=2, eta_resolution=COARSE)


def test_predicted_exponents_table():
    assert predicted_exponents("B3", True, 1.0) == (-0.5, -1.0)
    assert predicted_exponents("B1_T", False, 1.0) == (0.5, 1.0)

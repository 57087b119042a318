import numpy as np
import pytest
from pydantic import ValidationError
from nhosc.core.parameters import (
    COUPLINGS,
    ConstantProfile,
    LinearProfile,
    ParameterSet,
    PolynomialProfile,
    PTVerdict,
    TabulatedProfile,
    _Profile,
    eval_profile,
    eval_profile_derivative,
    pt_classify,
)
from nhosc.shared.exceptions import OutOfRange, ParameterError
from tests.fixtures.params import make_params


def test_constant_profile_scalar_and_array():
    profile = ConstantProfile(value=2.5)
    assert eval_profile(profile, 1.0) == 2.5
    assert isinstance(eval_profile(profile, 1.0), float)
    np.testing.assert_array_equal(eval_profile(profile, np.array([0.0, 1.0])), [2.5, 2.5])
    assert eval_profile_derivative(profile, 3.0) == 0.0


def test_linear_profile():
    profile = LinearProfile(slope=0.1, intercept=1.0)
    assert eval_profile(profile, 2.0) == pytest.approx(1.2)
    assert eval_profile_derivative(profile, 2.0) == pytest.approx(0.1)


def test_polynomial_profile_horner():
    profile = PolynomialProfile(coefficients=[1.0, -2.0, 3.0])
    t = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(eval_profile(profile, t), 1.0 - 2.0 * t + 3.0 * t * t)
    np.testing.assert_allclose(eval_profile_derivative(profile, t), -2.0 + 6.0 * t)


def test_tabulated_profile_interpolates_and_refuses_extrapolation():
    profile = TabulatedProfile(times=[0.0, 1.0, 2.0], values=[1.0, 2.0, 3.0])
    assert eval_profile(profile, 0.5) == pytest.approx(1.5)
    with pytest.raises(OutOfRange) as exc:
        eval_profile(profile, 2.5)
    assert exc.value.t == 2.5


def test_tabulated_profile_requires_increasing_times():
    with pytest.raises(ValidationError):
        TabulatedProfile(times=[0.0, 0.0, 1.0], values=[1.0, 2.0, 3.0])


def test_parameter_set_reads_lambda_alias():
    params = make_params(0.1)
    assert params.lam.evaluate(2.0) == pytest.approx(0.2)
    assert params.coupling == COUPLINGS["imaginary"] == 1j
    assert params.to_json_dict()["lambda"]["slope"] == 0.1


def test_couplings():
    assert COUPLINGS["real"] == 1.0
    assert COUPLINGS["mixed"] == pytest.approx(-1.0 + 1.0j)


def test_window_rejects_non_positive_mass():
    with pytest.raises(ParameterError, match="mass"):
        ParameterSet.model_validate({
            "mass": {"kind": "linear", "slope": -1.0, "intercept": 1.0},
            "omega_sq": {"kind": "constant", "value": 1.0},
            "lambda": {"kind": "constant", "value": 0.0},
            "window": [0.0, 2.0],
        })


def test_check_window_direct():
    params = make_params(0.1)
    params.check_window(0.0, 3.0)
    bad = make_params(0.1, omega_sq=-1.0)
    with pytest.raises(ParameterError, match="omega_sq"):
        bad.check_window(0.0, 1.0)


def test_constant_oscillator_and_linear_slope():
    params = make_params(0.3)
    assert params.is_constant_oscillator()
    assert params.linear_drive_slope() == 0.3
    shifted = ParameterSet.model_validate({
        "mass": {"kind": "constant", "value": 1.0},
        "omega_sq": {"kind": "polynomial", "coefficients": [1.0, 0.1]},
        "lambda": {"kind": "linear", "slope": 0.1, "intercept": 0.2},
    })
    assert not shifted.is_constant_oscillator()
    assert shifted.linear_drive_slope() is None


def test_pt_classify_hermitian_when_drive_vanishes():
    assert pt_classify(make_params(0.0), 3.0).verdict is PTVerdict.HERMITIAN


def test_pt_classify_real_drive_is_hermitian():
    assert pt_classify(make_params(0.1, drive="real"), 3.0).verdict is PTVerdict.HERMITIAN


def test_pt_classify_even_drive_is_symmetric():
    params = ParameterSet.model_validate({
        "mass": {"kind": "constant", "value": 1.0},
        "omega_sq": {"kind": "constant", "value": 1.0},
        "lambda": {"kind": "polynomial", "coefficients": [0.0, 0.0, 0.1]},
    })
    assert pt_classify(params, 2.0).verdict is PTVerdict.PT_SYMMETRIC


def test_pt_classify_odd_drive_violates():
    result = pt_classify(make_params(0.1), 3.0)
    assert result.verdict is PTVerdict.PT_VIOLATING
    assert result.offender == "lambda"
    assert result.evidence == pytest.approx(0.6, rel=1e-2)


def test_pt_classify_uneven_mass_is_reported():
    params = ParameterSet.model_validate({
        "mass": {"kind": "linear", "slope": 0.1, "intercept": 1.0},
        "omega_sq": {"kind": "constant", "value": 1.0},
        "lambda": {"kind": "constant", "value": 0.0},
    })
    result = pt_classify(params, 1.0)
    assert result.verdict is PTVerdict.PT_VIOLATING
    assert result.offender == "mass"


def test_pt_classify_rejects_bad_window():
    with pytest.raises(ParameterError):
        pt_classify(make_params(0.1), 0.0)


def test_profile_base_is_abstract():
    with pytest.raises(TypeError):
        _Profile()


def test_polynomial_derivative_matches_central_difference():
    profile = PolynomialProfile(coefficients=[0.3, -1.2, 0.5, 0.25])
    h = 1e-5
    for t in np.linspace(-2.0, 2.0, 9):
        fd = (eval_profile(profile, t + h) - eval_profile(profile, t - h)) / (2.0 * h)
        assert eval_profile_derivative(profile, t) == pytest.approx(fd, rel=1e-7, abs=1e-9)


def _with_drive(coefficients):
    return ParameterSet.model_validate({
        "mass": {"kind": "constant", "value": 1.0},
        "omega_sq": {"kind": "constant", "value": 1.0},
        "lambda": {"kind": "polynomial", "coefficients": coefficients},
    })


@pytest.mark.parametrize("coefficients", [
    [0.0, 0.1],
    [0.0, 0.0, 0.1],
    [0.2, 0.1, 0.0, -0.05],
    [0.0],
])
def test_pt_classify_invariant_under_time_reversed_drive(coefficients):
    reversed_drive = [c * (-1) ** k for k, c in enumerate(coefficients)]
    forward = pt_classify(_with_drive(coefficients), 2.0)
    backward = pt_classify(_with_drive(reversed_drive), 2.0)
    assert backward.verdict is forward.verdict
    assert backward.evidence == pytest.approx(forward.evidence, rel=1e-12, abs=1e-15)

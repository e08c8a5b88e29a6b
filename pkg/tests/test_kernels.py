import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from npiv import (
    BaseKernel,
    BoundaryPolicy,
    GeneralizedKernel,
    InputDataError,
    KernelFamily,
    ParameterError,
    scaled_moments,
)
from npiv.errors import DomainError

EPA = BaseKernel(KernelFamily.EPANECHNIKOV)


class TestBaseKernel:
    def test_peak_value(self):
        assert EPA(0.0) == 0.75

    def test_support_boundary(self):
        assert EPA(1.0) == 0.0
        assert EPA(-1.0) == 0.0
        assert EPA(1.2) == 0.0

    def test_symmetry(self):
        u = np.linspace(0, 1, 57)
        np.testing.assert_array_equal(EPA(u), EPA(-u))

    def test_second_moment(self):
        # closed form 0.75 * (2/3 - 2/5) = 0.2, cross-checked by quadrature
        quad = integrate.quad(lambda u: u * u * 0.75 * (1 - u * u), -1, 1)[0]
        assert EPA.partial_moment(2, -1, 1) == pytest.approx(0.2, abs=1e-12)
        assert EPA.partial_moment(2, -1, 1) == pytest.approx(quad, abs=1e-10)

    def test_non_finite_rejected(self):
        with pytest.raises(InputDataError):
            EPA(np.nan)

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_unit_mass_and_vanishing_moments(self, family):
        k = BaseKernel(family)
        assert k.partial_moment(0, -1, 1) == pytest.approx(1.0, abs=1e-12)
        for j in range(1, k.order):
            assert k.partial_moment(j, -1, 1) == pytest.approx(0.0, abs=1e-12)

    def test_fourth_order_family(self):
        k4 = BaseKernel(KernelFamily.EPANECHNIKOV_O4)
        assert k4.order == 4
        assert k4.partial_moment(2, -1, 1) == pytest.approx(0.0, abs=1e-12)


class TestGeneralizedKernel:
    def test_interior_reduces_to_base(self):
        gk = GeneralizedKernel(EPA, 0.1, BoundaryPolicy.MOMENT_MATCHED)
        assert gk.evaluate(0.0, 0.5) == 0.75

    def test_support_condition(self):
        for policy in BoundaryPolicy:
            gk = GeneralizedKernel(EPA, 0.3, policy)
            assert gk.evaluate(0.5 + 0.01, 0.5) == 0.0
            assert gk.evaluate(0.5 - 1.01, 0.5) == 0.0

    def test_boundary_value_left_edge(self):
        # 2x2 moment system at the left edge, support [-1, 0]:
        # s0=1/2, s1=-3/16, s2=1/10 give K(-0.5)*(s2-s1*(-0.5))/(s0*s2-s1^2) = 9/38
        gk = GeneralizedKernel(EPA, 0.2, BoundaryPolicy.MOMENT_MATCHED)
        assert gk.evaluate(-0.1, 0.0) == pytest.approx(9.0 / 38.0, rel=1e-12)

    def test_plain_ignores_location(self):
        gk = GeneralizedKernel(EPA, 0.2, BoundaryPolicy.PLAIN)
        assert gk.evaluate(-0.1, 0.03) == gk.evaluate(-0.1, 0.7)
        assert gk.evaluate(-0.1, 0.03) == EPA(-0.5)

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            GeneralizedKernel(EPA, 0.0)
        with pytest.raises(DomainError):
            GeneralizedKernel(EPA, 0.1).evaluate(0.0, 1.5)
        with pytest.raises(ParameterError):
            GeneralizedKernel(BaseKernel(KernelFamily.EPANECHNIKOV_O4), 0.1)

    @given(
        t=st.floats(0.0, 1.0),
        h=st.floats(0.01, 0.45),
        u=st.floats(-1.5, 1.5),
    )
    def test_support_exact_everywhere(self, t, h, u):
        gk = GeneralizedKernel(EPA, h, BoundaryPolicy.MOMENT_MATCHED)
        if u > t or u < t - 1.0:
            assert gk.evaluate(u, t) == 0.0

    @given(t=st.floats(0.0, 1.0), h=st.floats(0.02, 0.45))
    def test_interior_agreement(self, t, h):
        gk = GeneralizedKernel(EPA, h, BoundaryPolicy.MOMENT_MATCHED)
        if h <= t <= 1.0 - h:
            u = 0.4 * h
            assert gk.evaluate(u, t) == EPA(u / h)


class TestScaledMoments:
    @pytest.mark.parametrize("t", np.round(np.arange(0.0, 1.0001, 0.05), 10).tolist())
    def test_matched_moments_on_location_grid(self, t):
        gk = GeneralizedKernel(EPA, 0.2, BoundaryPolicy.MOMENT_MATCHED)
        m = scaled_moments(gk, t, 1)
        assert m[0] == pytest.approx(1.0, abs=1e-6)
        assert m[1] == pytest.approx(0.0, abs=1e-6)

    @given(t=st.floats(0.0, 1.0), h=st.floats(0.02, 0.45))
    def test_matched_moments_random_locations(self, t, h):
        gk = GeneralizedKernel(EPA, h, BoundaryPolicy.MOMENT_MATCHED)
        m = scaled_moments(gk, t, 1)
        assert abs(m[0] - 1.0) < 1e-6
        assert abs(m[1]) < 1e-6

    def test_plain_loses_mass_at_the_edge(self):
        gk = GeneralizedKernel(EPA, 0.2, BoundaryPolicy.PLAIN)
        m0 = scaled_moments(gk, 0.05, 0)[0]
        # truncated integral of the base kernel up to 0.25
        assert m0 == pytest.approx(0.68359375, abs=1e-9)
        assert m0 < 1.0

    def test_interior_plain_mass_is_one(self):
        gk = GeneralizedKernel(EPA, 0.2, BoundaryPolicy.PLAIN)
        assert scaled_moments(gk, 0.5, 0)[0] == pytest.approx(1.0, abs=1e-12)


def test_scaled_kernel_bounded():
    # sup over locations and offsets of |K_h(h u, t)| stays below a fixed bound
    worst = 0.0
    for h in (0.05, 0.1, 0.2, 0.4):
        gk = GeneralizedKernel(EPA, h, BoundaryPolicy.MOMENT_MATCHED)
        for t in np.linspace(0.0, 1.0, 101):
            u = np.linspace(-1.0, 1.0, 201)
            vals = gk.evaluate(h * u, np.full_like(u, t))
            worst = max(worst, np.max(np.abs(vals)))
    assert worst < 6.0

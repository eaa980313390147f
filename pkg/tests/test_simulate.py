import numpy as np
import pytest

from alphait.simplex import CompositionalField, DomainError, uniform
from alphait.simulate import (MAX_POINTS, GRFSampler, ScenarioConfig, apply_scenario, inject_zeros, preset_names,
                              simulate_field, simulate_grf, to_compositions)
from alphait.transforms import alpha_it, helmert, in_codomain


@pytest.fixture(scope="module")
def base_draw():
    return simulate_grf(ScenarioConfig(alpha0=0.0, scale=1.0, n_points=2000, seed=7))


class TestPresets:
    @pytest.mark.parametrize("name,shift,scale", [
        ("center-0.2", (0.0, 0.0), 0.50), ("corner-0.6", (4.0, -3.0), 0.11),
        ("border-0.6", (-2.3, 1.0), 0.15), ("corner-1", (4.0, -3.0), 0.045), ("center-0", (0.0, 0.0), 1.0)])
    def test_table_values(self, name, shift, scale):
        sc = ScenarioConfig.preset(name)
        assert sc.shift == shift and sc.scale == scale
        assert sc.alpha0 == float(name.split("-")[1])

    def test_names(self):
        names = preset_names()
        assert len(names) == 12 and "border-0.2" in names
        with pytest.raises(ValueError):
            ScenarioConfig.preset("middle-0.2")
        with pytest.raises(ValueError):
            ScenarioConfig.preset("center-0.3")

    def test_overrides(self):
        sc = ScenarioConfig.preset("center-0.6", n_points=50, seed=3)
        assert sc.n_points == 50 and sc.seed == 3 and sc.scale == 0.15
        assert sc.replicate(4).seed == 7

    def test_validation(self):
        with pytest.raises(ValueError):
            ScenarioConfig(scale=0.0)
        with pytest.raises(ValueError):
            ScenarioConfig(n_points=MAX_POINTS + 1)
        with pytest.raises(ValueError):
            ScenarioConfig(shift=(0.0,))

    def test_all_presets_inside_codomain(self, base_draw):
        _, Z = base_draw
        for name in preset_names():
            sc = ScenarioConfig.preset(name)
            out = apply_scenario(Z, sc)
            if sc.alpha0 > 0:
                assert np.all(in_codomain(out, sc.alpha0))
            fld = to_compositions(out, sc.alpha0, base_draw[0])
            assert fld.strictly_positive


class TestField:
    def test_sample_covariance(self, base_draw):
        _, Z = base_draw
        np.testing.assert_allclose(np.cov(Z.T), [[1.0, 0.8], [0.8, 1.0]], atol=0.1)
        assert abs(np.corrcoef(Z.T)[0, 1] - 0.8) <= 0.1

    def test_component_variogram_exponential(self, base_draw):
        from alphait.geostat import empirical_cross_variogram

        loc, Z = base_draw
        ev = empirical_cross_variogram(loc, Z[:, :1])
        g = ev.gamma[:, 0, 0]
        model = 1 - np.exp(-ev.lags)
        # shape and sill up to the variability of one realisation
        assert np.abs(g - g[-5:].mean() * model).max() < 0.25
        assert abs(g[-5:].mean() - 1) < 0.3

    def test_determinism(self):
        sc = ScenarioConfig.preset("border-0.2", n_points=200, seed=11)
        f1, z1 = simulate_field(sc)
        f2, z2 = simulate_field(sc)
        np.testing.assert_array_equal(f1.parts, f2.parts)
        np.testing.assert_array_equal(f1.locations, f2.locations)
        np.testing.assert_array_equal(z1, z2)
        f3, _ = simulate_field(sc.replicate(1))
        assert not np.array_equal(f1.parts, f3.parts)

    def test_round_trip(self):
        sc = ScenarioConfig.preset("corner-0.6", n_points=300, seed=2)
        fld, Z = simulate_field(sc)
        assert np.abs(alpha_it(fld.parts, 0.6) - Z).max() <= 1e-7

    def test_linear_oracle(self, rng):
        Z = rng.normal(0, 0.05, (20, 2))
        fld = to_compositions(Z, 1.0, rng.uniform(0, 1, (20, 2)))
        np.testing.assert_allclose(fld.parts, Z @ helmert(3) + 1 / 3, atol=1e-14)

    def test_origin(self):
        fld = to_compositions([[0.0, 0.0]], 0.4, [[0.0, 0.0]])
        np.testing.assert_allclose(fld.parts[0], uniform(3), atol=1e-15)

    def test_identity_scenario(self, rng):
        Z = rng.normal(size=(10, 2))
        sc = ScenarioConfig(alpha0=0.0, scale=1.0)
        np.testing.assert_array_equal(apply_scenario(Z, sc), Z)

    def test_outside_named(self, rng):
        sc = ScenarioConfig(alpha0=0.6, shift=(4.0, -3.0), scale=1.0)
        with pytest.raises(DomainError, match="point 0"):
            apply_scenario(np.zeros((3, 2)), sc)
        with pytest.raises(DomainError):
            to_compositions([[10.0, -10.0]], 0.6, [[0.0, 0.0]])

    def test_invalid_coregionalization(self, rng):
        with pytest.raises(ValueError):
            GRFSampler(rng.uniform(0, 5, (30, 2)), np.array([[1.0, 1.5], [1.5, 1.0]]))

    def test_three_variables(self):
        sc = ScenarioConfig(alpha0=0.3, shift=(0.0, 0.0, 0.0), scale=0.4, n_points=100, p=3, seed=4)
        fld, _ = simulate_field(sc)
        assert fld.D == 4


@pytest.fixture(scope="module")
def d4_field():
    sc = ScenarioConfig(alpha0=0.2, shift=(0.0, 0.0, 0.0), scale=0.5, n_points=1000, p=3, seed=1)
    return simulate_field(sc)[0]


class TestInjectZeros:
    def test_fraction_zero(self, d4_field):
        assert inject_zeros(d4_field, 0.0) is d4_field

    def test_census_mix(self, d4_field):
        out = inject_zeros(d4_field, 0.43, (31, 12), seed=5)
        assert out.zero_census() == {0: 570, 1: 310, 2: 120, 3: 0}

    def test_structure(self, d4_field):
        out = inject_zeros(d4_field, 0.5, (0.7, 0.3), seed=9)
        P = out.parts
        assert np.abs(P.sum(axis=1) - 1).max() < 1e-14
        assert np.all((P > 0).sum(axis=1) >= 2)
        np.testing.assert_array_equal(out.locations, d4_field.locations)
        hit = np.flatnonzero(np.any(P == 0, axis=1))
        for i in hit:
            k = int((P[i] == 0).sum())
            smallest = np.sort(np.argsort(d4_field.parts[i])[:k])
            np.testing.assert_array_equal(np.flatnonzero(P[i] == 0), smallest)
            keep = P[i] > 0
            np.testing.assert_allclose(P[i, keep], d4_field.parts[i, keep] / d4_field.parts[i, keep].sum())

    def test_deterministic(self, d4_field):
        a = inject_zeros(d4_field, 0.3, (1, 1), seed=2)
        b = inject_zeros(d4_field, 0.3, (1, 1), seed=2)
        c = inject_zeros(d4_field, 0.3, (1, 1), seed=3)
        np.testing.assert_array_equal(a.parts, b.parts)
        assert not np.array_equal(a.parts, c.parts)

    def test_errors(self, d4_field):
        with pytest.raises(ValueError):
            inject_zeros(d4_field, 1.0)
        with pytest.raises(ValueError):
            inject_zeros(d4_field, 0.2, (1, 1, 1))
        with pytest.raises(ValueError):
            inject_zeros(d4_field, 0.2, (-1, 2))
        three = CompositionalField([[0.0, 0.0], [1.0, 0.0]], [[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]])
        with pytest.raises(ValueError):
            inject_zeros(three, 0.5, (0, 1))

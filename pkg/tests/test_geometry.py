import numpy as np
import pytest
from scipy.optimize import brentq

from regulab.errors import ConfigurationError, InputError
from regulab.geometry import make_domain, osc_boundary


class TestMakeDomain:
    def test_half_ball_flat_part(self):
        d = make_domain("half_ball")
        # the flat strip through the origin belongs to the boundary: points
        # just above are inside, just below are outside
        for x1 in np.linspace(-0.9, 0.9, 21):
            assert d.inside(np.array([x1, 1e-9]))
            assert not d.inside(np.array([x1, -1e-9]))

    def test_graph_bump_membership(self):
        d = make_domain("graph_bump", [0.3, 1.5])
        assert d.inside(np.array([0.0, 0.5]))
        # (0.5, 0): decided by 0 vs 0.3*0.5^1.5
        assert 0.0 < 0.3 * 0.5 ** 1.5
        assert not d.inside(np.array([0.5, 0.0]))
        assert d.inside(np.array([0.5, 0.3 * 0.5 ** 1.5 + 1e-6]))
        assert not d.inside(np.array([-0.5, -0.3 * 0.5 ** 1.5 - 1e-6]))
        assert d.inside(np.array([-0.5, 0.0]))  # antisymmetric bump dips down

    def test_slit_ball_membership(self):
        d = make_domain("slit_ball")
        assert d.inside(np.array([0.0, 1e-3]))
        # (0.3, 0.045) lies on the slit (0.3^2/2 = 0.045) and is excluded
        assert 0.3 ** 2 / 2 == 0.045
        assert not d.inside(np.array([0.3, 0.045]))

    def test_origin_on_boundary(self):
        # 0 is a limit of inside and outside points for every catalog kind
        for kind, params in (
            ("half_ball", []),
            ("ball", []),
            ("graph_bump", [0.3, 1.5]),
            ("slit_ball", []),
        ):
            d = make_domain(kind, params)
            assert not d.inside(np.zeros(2))
            eps = 1e-7
            probes = np.array(
                [[0, eps], [0, -eps], [eps, eps], [-eps, eps], [0, 2 * eps]]
            )
            flags = d.inside(probes)
            assert flags.any() and not flags.all()

    def test_invalid_params(self):
        with pytest.raises(ConfigurationError):
            make_domain("graph_bump", [0.3])
        with pytest.raises(ConfigurationError):
            make_domain("graph_bump", [-0.1, 1.5])
        with pytest.raises(ConfigurationError):
            make_domain("graph_bump", [0.1, 1.0])
        with pytest.raises(ConfigurationError):
            make_domain("half_ball", [1.0])
        with pytest.raises(ConfigurationError):
            make_domain("torus")


class TestOsc:
    def test_half_ball_flat(self):
        assert osc_boundary(make_domain("half_ball"), 0.5) == pytest.approx(0.0, abs=1e-9)

    def test_graph_bump_oracle(self):
        K, e = 0.3, 1.5
        d = make_domain("graph_bump", [K, e])
        for r in (0.25, 0.5):
            # dense-sampling oracle: sup - inf of the signed bump over the
            # curve portion inside B_r; the extreme |x1| solves
            # x1^2 + K^2 x1^(2e) = r^2
            x1max = brentq(lambda x: x * x + K ** 2 * x ** (2 * e) - r * r, 0, r)
            oracle = 2 * K * x1max ** e
            assert osc_boundary(d, r) == pytest.approx(oracle, abs=1e-9)

    def test_slit_ball_oracle(self):
        d = make_domain("slit_ball")
        r = 0.25
        # dense-sampling oracle over both pieces
        t = np.linspace(-np.pi, np.pi, 400001)
        circ = np.stack([np.cos(t), 1 + np.sin(t)], axis=1)
        circ = circ[np.hypot(circ[:, 0], circ[:, 1]) <= r]
        x1 = np.linspace(-0.5, 0.5, 400001)
        par = np.stack([x1, 0.5 * x1 ** 2], axis=1)
        par = par[np.hypot(par[:, 0], par[:, 1]) <= r]
        ys = np.concatenate([circ[:, 1], par[:, 1]])
        oracle = ys.max() - ys.min()
        val = osc_boundary(d, r)
        assert val == pytest.approx(oracle, abs=1e-6)
        assert val == pytest.approx(r * r / 2, abs=1e-6)

    def test_monotone_in_radius(self):
        d = make_domain("graph_bump", [0.3, 1.5])
        vals = [osc_boundary(d, r) for r in (0.125, 0.25, 0.5, 1.0)]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_radius_validated(self):
        with pytest.raises(InputError):
            osc_boundary(make_domain("half_ball"), 0.0)


class TestCrossings:
    def test_circle_crossing_against_oracle(self):
        d = make_domain("ball")
        piece = d.pieces()[0]
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = rng.uniform(-0.5, 0.5, 2) + np.array([0.0, 1.0])
            if not d.inside(p):
                continue
            v = rng.normal(size=2)
            v *= 3.0 / np.hypot(*v)
            t = piece.first_crossing(p[None, :], v[None, :])[0]
            if np.isfinite(t):
                q = p + t * v

                def radial(s):
                    z = p + s * v
                    return np.hypot(z[0], z[1] - 1.0) - 1.0

                t_or = brentq(radial, 0.0, t + 1e-9)
                assert t == pytest.approx(t_or, abs=1e-10)
                assert np.hypot(q[0], q[1] - 1.0) == pytest.approx(1.0, abs=1e-10)

    def test_power_curve_crossing(self):
        d = make_domain("graph_bump", [0.3, 1.5])
        curve = d.pieces()[0]
        p = np.array([[0.2, 0.3]])
        v = np.array([[0.0, -0.5]])
        t = curve.first_crossing(p, v)[0]
        y_at = 0.3 - 0.5 * t
        assert y_at == pytest.approx(0.3 * 0.2 ** 1.5, abs=1e-10)

    def test_parabola_two_sided(self):
        d = make_domain("slit_ball", [1.0])
        slit = d.pieces()[1]
        # crossing from below and from above
        up = slit.first_crossing(np.array([[0.1, 0.0]]), np.array([[0.0, 0.05]]))[0]
        down = slit.first_crossing(np.array([[0.1, 0.02]]), np.array([[0.0, -0.02]]))[0]
        assert np.isfinite(up) and np.isfinite(down)
        assert 0.0 + up * 0.05 == pytest.approx(0.01, abs=1e-12)
        assert 0.02 - down * 0.02 == pytest.approx(0.01, abs=1e-12)


def test_serialization_roundtrip():
    d = make_domain("graph_bump", [0.3, 1.5])
    rec = d.to_dict()
    d2 = make_domain(rec["kind"], rec["params"])
    pts = np.random.default_rng(0).uniform(-1, 1, size=(100, 2))
    assert np.array_equal(d.inside(pts), d2.inside(pts))

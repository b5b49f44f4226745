import numpy as np
import pytest

from knnres import (InvalidArgumentError, affine_net, backward, forward,
                    init_net, load_net, save_net)
from knnres.net import _forward_arr
from oracles import fd_param_grad, grad_rel_error, randomized_net


class TestInit:
    def test_identity_at_init(self):
        rng = np.random.default_rng(0)
        Y = rng.uniform(-3, 3, size=(20, 4))
        net = init_net(4, [50, 50], seed=5)
        assert np.array_equal(forward(net, Y).data, Y)

    def test_seed_determinism(self):
        a = init_net(3, [10, 10], seed=42)
        b = init_net(3, [10, 10], seed=42)
        for (Wa, ba), (Wb, bb) in zip(a.layers, b.layers):
            assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)

    def test_different_seeds_differ(self):
        a = init_net(3, [10], seed=1)
        b = init_net(3, [10], seed=2)
        assert not np.array_equal(a.layers[0][0], b.layers[0][0])

    def test_bad_args(self):
        with pytest.raises(InvalidArgumentError):
            init_net(0, [5])
        with pytest.raises(InvalidArgumentError):
            init_net(2, [0])


class TestForward:
    def test_linear_single_layer(self):
        # one affine layer: delta(y) = 0.1 I y, so phi(y) = 1.1 y
        net = affine_net(1.1 * np.eye(2))
        Y = np.random.default_rng(1).uniform(size=(6, 2))
        assert forward(net, Y).data == pytest.approx(1.1 * Y, abs=1e-14)

    def test_rows_independent(self):
        net = randomized_net(3, [8], seed=2)
        Y = np.random.default_rng(3).uniform(size=(10, 3))
        batch = forward(net, Y).data
        singles = np.vstack([forward(net, Y[i:i + 1]).data for i in range(10)])
        assert batch == pytest.approx(singles, abs=1e-15)

    def test_dimension_mismatch(self):
        net = init_net(2, [4])
        with pytest.raises(InvalidArgumentError):
            forward(net, np.zeros((3, 5)))

    def test_leaky_negative_branch(self):
        # hand-built single hidden unit: z = -1 -> activation slope kicks in
        net = init_net(1, [1], leaky_slope=0.5, seed=0).with_layers(
            ((np.array([[1.0]]), np.array([-2.0])),
             (np.array([[1.0]]), np.array([0.0])))
        )
        out = forward(net, np.array([[1.0]])).data  # z = -1, act = -0.5, phi = 0.5
        assert out[0, 0] == pytest.approx(0.5)


class TestBackward:
    def test_zero_cotangent(self):
        net = randomized_net(2, [5], seed=4)
        Y = np.random.default_rng(5).uniform(size=(7, 2))
        grad, input_grad = backward(net, Y, np.zeros((7, 2)))
        assert grad.norm() == 0.0
        assert np.all(input_grad == 0.0)

    def test_identity_init_passes_cotangent(self):
        net = init_net(3, [6, 6], seed=6)
        Y = np.random.default_rng(7).uniform(size=(5, 3))
        G = np.random.default_rng(8).standard_normal((5, 3))
        _, input_grad = backward(net, Y, G)
        assert np.array_equal(input_grad, G)

    def test_param_grad_matches_fd(self):
        net = randomized_net(2, [4], seed=9)
        rng = np.random.default_rng(10)
        Y = rng.uniform(size=(6, 2))
        G = rng.standard_normal((6, 2))

        def probe(n):
            out, _ = _forward_arr(n, Y)
            return float(np.sum(out * G))

        analytic, _ = backward(net, Y, G)
        fd = fd_param_grad(probe, net, h=1e-6)
        for (aW, ab), (fW, fb) in zip(analytic.layers, fd):
            assert np.all(np.abs(aW - fW) / (np.abs(aW) + 1e-8) < 1e-5)
            assert np.all(np.abs(ab - fb) / (np.abs(ab) + 1e-8) < 1e-5)

    def test_input_grad_matches_fd(self):
        net = randomized_net(2, [4, 3], seed=11)
        rng = np.random.default_rng(12)
        Y = rng.uniform(size=(4, 2))
        G = rng.standard_normal((4, 2))
        _, input_grad = backward(net, Y, G)
        h = 1e-6
        for p in range(4):
            for c in range(2):
                up, dn = Y.copy(), Y.copy()
                up[p, c] += h
                dn[p, c] -= h
                fd = (np.sum(_forward_arr(net, up)[0] * G)
                      - np.sum(_forward_arr(net, dn)[0] * G)) / (2 * h)
                assert input_grad[p, c] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_shape_mismatch(self):
        net = init_net(2, [4])
        with pytest.raises(InvalidArgumentError):
            backward(net, np.zeros((3, 2)), np.zeros((4, 2)))


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        net = randomized_net(3, [7, 5], seed=13)
        path = tmp_path / "net.npz"
        save_net(net, path)
        loaded = load_net(path)
        assert loaded.d == net.d
        assert loaded.hidden == net.hidden
        assert loaded.leaky_slope == net.leaky_slope
        for (Wa, ba), (Wb, bb) in zip(net.layers, loaded.layers):
            assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)

    def test_affine_net_round_trip(self, tmp_path):
        net = affine_net(np.array([[0.0, -1.0], [1.0, 0.0]]), offset=[0.5, -0.5])
        path = tmp_path / "rot.npz"
        save_net(net, path)
        loaded = load_net(path)
        Y = np.random.default_rng(1).uniform(size=(5, 2))
        assert np.array_equal(forward(net, Y).data, forward(loaded, Y).data)

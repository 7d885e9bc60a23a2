"""
Unit tests for layer specs and per-layer kernels
"""

import sys
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from afnet.activations import ALRELU, RELU
from afnet.errors import ShapeError, ValidationError
from afnet.layers import LayerSpec, LayerType, create_layer


def _numeric_input_grad(layer, x, dy, step=1e-6):
    """Central difference of sum(forward(x) * dy) with respect to x"""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = (layer.forward(x, False, None)[0] * dy).sum()
        flat[i] = original - step
        minus = (layer.forward(x, False, None)[0] * dy).sum()
        flat[i] = original
        out[i] = (plus - minus) / (2 * step)
    return grad


class TestLayerSpec(unittest.TestCase):
    """Test spec validation and serialization"""

    def test_invalid_specs(self):
        with self.assertRaises(ValidationError):
            LayerSpec.dense(0)
        with self.assertRaises(ValidationError):
            LayerSpec.conv2d(4, 2)
        with self.assertRaises(ValidationError):
            LayerSpec.conv2d(0, 3)
        with self.assertRaises(ValidationError):
            LayerSpec.dropout(1.0)
        with self.assertRaises(ValidationError):
            LayerSpec.max_pool2d(0)
        with self.assertRaises(ValidationError):
            LayerSpec(LayerType.ACTIVATION)

    def test_dict_round_trip(self):
        specs = [
            LayerSpec.dense(5),
            LayerSpec.conv2d(3, 5),
            LayerSpec.max_pool2d(2),
            LayerSpec.dropout(0.25),
            LayerSpec.act("alrelu"),
            LayerSpec.global_max_pool(),
            LayerSpec.softmax(),
        ]
        for spec in specs:
            self.assertEqual(LayerSpec.from_dict(spec.to_dict()), spec)

    def test_unknown_type(self):
        with self.assertRaises(ValidationError):
            LayerSpec.from_dict({"type": "attention"})


class TestShapes(unittest.TestCase):
    """Test output shape arithmetic"""

    def test_conv_valid_padding(self):
        layer = create_layer(LayerSpec.conv2d(32, 5), 0, (16, 16, 1))
        self.assertEqual(layer.out_shape, (12, 12, 32))

    def test_pool_crops_odd_sizes(self):
        layer = create_layer(LayerSpec.max_pool2d(2), 3, (5, 7, 4))
        self.assertEqual(layer.out_shape, (2, 3, 4))

    def test_dense_needs_flat_input(self):
        with self.assertRaises(ShapeError) as ctx:
            create_layer(LayerSpec.dense(4), 2, (4, 4, 1))
        self.assertIn("layer 2", str(ctx.exception))

    def test_kernel_larger_than_map(self):
        with self.assertRaises(ShapeError):
            create_layer(LayerSpec.conv2d(1, 5), 0, (3, 3, 1))


class TestConv2D(unittest.TestCase):
    """Test convolution kernels"""

    def test_all_ones_kernel(self):
        layer = create_layer(LayerSpec.conv2d(1, 3), 0, (5, 5, 1))
        layer.init_params(np.random.default_rng(0))
        layer.params["W"][:] = 1.0
        y, _ = layer.forward(np.ones((1, 5, 5, 1), dtype=np.float32), False, None)
        self.assertEqual(y.shape, (1, 3, 3, 1))
        np.testing.assert_array_equal(y, 9.0)

    def test_input_gradient(self):
        rng = np.random.default_rng(1)
        layer = create_layer(LayerSpec.conv2d(2, 3), 0, (4, 5, 2))
        layer.init_params(rng)
        layer.params["W"] = layer.params["W"].astype(np.float64)
        layer.params["b"] = layer.params["b"].astype(np.float64)
        layer.zero_grads()

        x = rng.standard_normal((2, 4, 5, 2))
        dy = rng.standard_normal((2, 2, 3, 2))
        _, cache = layer.forward(x, True, None)
        analytic = layer.backward(cache, dy)
        np.testing.assert_allclose(analytic, _numeric_input_grad(layer, x, dy), rtol=1e-5, atol=1e-7)


class TestPooling(unittest.TestCase):
    """Test max and global pooling"""

    def test_max_pool_routes_gradient_to_winner(self):
        layer = create_layer(LayerSpec.max_pool2d(2), 0, (2, 2, 1))
        x = np.array([[[[1.0], [4.0]], [[3.0], [2.0]]]], dtype=np.float32)
        y, cache = layer.forward(x, False, None)
        self.assertEqual(y.reshape(-1)[0], 4.0)
        dx = layer.backward(cache, np.ones((1, 1, 1, 1), dtype=np.float32))
        np.testing.assert_array_equal(dx.reshape(-1), [0, 1, 0, 0])

    def test_global_pools(self):
        x = np.arange(2 * 3 * 3 * 2, dtype=np.float32).reshape(2, 3, 3, 2)
        avg = create_layer(LayerSpec.global_avg_pool(), 0, (3, 3, 2))
        mx = create_layer(LayerSpec.global_max_pool(), 0, (3, 3, 2))
        np.testing.assert_allclose(avg.forward(x, False, None)[0], x.mean(axis=(1, 2)))
        np.testing.assert_array_equal(mx.forward(x, False, None)[0], x.max(axis=(1, 2)))

    def test_global_max_gradient(self):
        layer = create_layer(LayerSpec.global_max_pool(), 0, (2, 2, 1))
        x = np.array([[[[0.5], [2.0]], [[-1.0], [1.0]]]], dtype=np.float32)
        _, cache = layer.forward(x, False, None)
        dx = layer.backward(cache, np.array([[3.0]], dtype=np.float32))
        np.testing.assert_array_equal(dx.reshape(-1), [0, 3, 0, 0])


class TestBatchNorm(unittest.TestCase):
    """Test batch normalisation"""

    def setUp(self):
        self.layer = create_layer(LayerSpec.batch_norm(), 0, (3,))
        self.layer.init_params(np.random.default_rng(0))

    def test_training_normalizes(self):
        x = np.random.default_rng(1).normal(5.0, 3.0, (64, 3)).astype(np.float32)
        y, _ = self.layer.forward(x, True, None)
        np.testing.assert_allclose(y.mean(axis=0), 0.0, atol=1e-5)
        np.testing.assert_allclose(y.std(axis=0), 1.0, atol=1e-3)

    def test_running_statistics_update(self):
        x = np.full((4, 3), 2.0, dtype=np.float32)
        self.layer.forward(x, True, None)
        np.testing.assert_allclose(self.layer.state["running_mean"], 0.02, rtol=1e-5)
        np.testing.assert_allclose(self.layer.state["running_var"], 0.99, rtol=1e-5)

    def test_inference_uses_running_statistics(self):
        x = np.ones((2, 3), dtype=np.float32)
        y, cache = self.layer.forward(x, False, None)
        self.assertIsNone(cache)
        np.testing.assert_allclose(y, 1.0 / np.sqrt(1.0 + 1e-3), rtol=1e-6)

    def test_backward_needs_training_cache(self):
        with self.assertRaises(ValidationError):
            self.layer.backward(None, np.ones((2, 3), dtype=np.float32))


class TestDropoutAndActivation(unittest.TestCase):
    """Test dropout scaling and activation layers"""

    def test_zero_rate_is_identity(self):
        layer = create_layer(LayerSpec.dropout(0.0), 0, (4,))
        x = np.ones((3, 4), dtype=np.float32)
        y, mask = layer.forward(x, True, np.random.default_rng(0))
        self.assertIsNone(mask)
        np.testing.assert_array_equal(y, x)

    def test_inverted_scaling(self):
        layer = create_layer(LayerSpec.dropout(0.5), 0, (1000,))
        y, _ = layer.forward(np.ones((1, 1000), dtype=np.float32), True, np.random.default_rng(0))
        self.assertTrue(set(np.unique(y).tolist()) <= {0.0, 2.0})

    def test_inference_identity(self):
        layer = create_layer(LayerSpec.dropout(0.5), 0, (4,))
        x = np.arange(4, dtype=np.float32)[None, :]
        np.testing.assert_array_equal(layer.forward(x, False, None)[0], x)

    def test_activation_backward(self):
        x = np.array([[-2.0, 3.0]], dtype=np.float32)
        alrelu = create_layer(LayerSpec.act(ALRELU), 0, (2,))
        relu = create_layer(LayerSpec.act(RELU), 0, (2,))
        dy = np.ones((1, 2), dtype=np.float32)
        np.testing.assert_allclose(alrelu.backward(alrelu.forward(x, True, None)[1], dy), [[-0.01, 1.0]])
        np.testing.assert_array_equal(relu.backward(relu.forward(x, True, None)[1], dy), [[0.0, 1.0]])


class TestSoftmax(unittest.TestCase):
    def test_rows_sum_to_one(self):
        layer = create_layer(LayerSpec.softmax(), 0, (4,))
        x = np.random.default_rng(0).normal(0, 50, (6, 4)).astype(np.float32)
        y, _ = layer.forward(x, False, None)
        np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-5)
        self.assertTrue(np.all(np.isfinite(y)))

    def test_input_gradient(self):
        rng = np.random.default_rng(2)
        layer = create_layer(LayerSpec.softmax(), 0, (3,))
        x = rng.standard_normal((2, 3))
        dy = rng.standard_normal((2, 3))
        _, cache = layer.forward(x, True, None)
        np.testing.assert_allclose(
            layer.backward(cache, dy), _numeric_input_grad(layer, x, dy), rtol=1e-5, atol=1e-8
        )


if __name__ == "__main__":
    unittest.main()

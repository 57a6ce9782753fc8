"""
Tests for the NN, HNN and gHNN model families
"""
import json

import numpy as np
import pytest

from conftest import fd_gradient, fd_jacobian, one_layer_gradient, random_mlp, relative_error
from hamiltonet.error_utils import BatchExhaustedError, ConfigError, SingularJacobianError
from hamiltonet.models import (
    Batch,
    FailureAction,
    GHNNModel,
    GhnnParams,
    HNNModel,
    InversionMode,
    JacobianInversePolicy,
    ModelKind,
    NNModel,
    SymplecticMatrix,
    build_model,
    condition_numbers,
    ghnn_loss,
    ghnn_transform,
    ghnn_vector_field,
    hnn_loss,
    hnn_vector_field,
    invert_jacobian,
    model_from_dict,
    nn_loss,
)
from hamiltonet.networks import MlpParams, forward_numpy

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
S2 = SymplecticMatrix(2).matrix


def identity_transform(d=2):
    return MlpParams.linear(np.eye(d))


def tanh_transform():
    """R = tanh(r) componentwise; the Jacobian is singular in practice once |r| is large"""
    return MlpParams((2, 2, 2), [np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)])


def flat_loss(model, batch):
    return lambda flat: model.with_flat_parameters(flat).loss(batch)


class TestSymplecticMatrix:
    def test_block_structure(self):
        np.testing.assert_array_equal(SymplecticMatrix(4).matrix[:2, 2:], np.eye(2))
        np.testing.assert_array_equal(SymplecticMatrix(4).matrix[2:, :2], -np.eye(2))

    def test_apply_matches_matrix(self, rng):
        g = rng.normal(size=(3, 4))
        np.testing.assert_allclose(SymplecticMatrix(4).apply(g), g @ SymplecticMatrix(4).matrix.T)

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            SymplecticMatrix(3)


class TestNN:
    def test_zero_network_single_pair_loss(self):
        params = random_mlp((2, 4, 2)).with_flat(np.zeros(random_mlp((2, 4, 2)).parameter_count))
        assert nn_loss(params, Batch([[0.3, 0.4]], [[1.0, 0.0]])) == pytest.approx(1.0)

    def test_exact_targets_give_zero_loss(self, rng):
        params = random_mlp((2, 4, 2), seed=3)
        r = rng.normal(size=(6, 2))
        assert nn_loss(params, Batch(r, forward_numpy(params, r))) == pytest.approx(0.0, abs=1e-28)

    def test_output_dimension(self, rng):
        model = NNModel(random_mlp((3, 5, 3)))
        assert model.vector_field(rng.normal(size=3)).shape == (3,)
        assert model.vector_field(rng.normal(size=(4, 3))).shape == (4, 3)

    def test_loss_gradient_matches_finite_differences(self, rng):
        model = NNModel(random_mlp((2, 6, 2), seed=5))
        batch = Batch(rng.normal(size=(8, 2)), rng.normal(size=(8, 2)))
        loss, grad = model.loss_and_gradient(batch)
        assert loss == pytest.approx(model.loss(batch))
        assert relative_error(grad, fd_gradient(flat_loss(model, batch), model.flat_parameters())) < 1e-6

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            NNModel(random_mlp((2, 3, 2))).loss(Batch(np.zeros((0, 2)), np.zeros((0, 2))))


class TestHNN:
    def test_field_is_symplectic_gradient(self, one_layer_hamiltonian):
        R = np.array([0.4, -0.9])
        g = one_layer_gradient(one_layer_hamiltonian, R)
        np.testing.assert_allclose(hnn_vector_field(one_layer_hamiltonian, R), [g[1], -g[0]], atol=1e-14)

    def test_batched_field(self, one_layer_hamiltonian, rng):
        R = rng.normal(size=(5, 2))
        g = one_layer_gradient(one_layer_hamiltonian, R)
        np.testing.assert_allclose(hnn_vector_field(one_layer_hamiltonian, R), g @ S2.T, atol=1e-14)

    def test_constant_hamiltonian_gives_zero_field(self, one_layer_hamiltonian):
        flat = one_layer_hamiltonian.flatten()
        flat[9:12] = 0.0  # output weights
        params = one_layer_hamiltonian.with_flat(flat)
        np.testing.assert_allclose(hnn_vector_field(params, np.array([0.1, 0.2])), 0.0)

    def test_field_is_divergence_free(self, rng):
        params = random_mlp((2, 8, 8, 1), seed=1)
        for _ in range(5):
            R = rng.normal(size=2)
            J = fd_jacobian(lambda x: hnn_vector_field(params, x), R)
            assert abs(np.trace(J)) < 1e-4

    def test_exact_targets_give_zero_loss(self, one_layer_hamiltonian, rng):
        R = rng.normal(size=(6, 2))
        batch = Batch(R, hnn_vector_field(one_layer_hamiltonian, R))
        assert hnn_loss(one_layer_hamiltonian, batch) == pytest.approx(0.0, abs=1e-28)

    def test_loss_ignores_constant_shift(self, rng):
        params = random_mlp((2, 8, 8, 1), seed=2)
        shifted = MlpParams(params.sizes, params.weights, params.biases[:-1] + [params.biases[-1] + 5.0])
        batch = Batch(rng.normal(size=(10, 2)), rng.normal(size=(10, 2)))
        assert hnn_loss(shifted, batch) == pytest.approx(hnn_loss(params, batch), abs=1e-12)

    def test_loss_gradient_matches_finite_differences(self, rng):
        model = HNNModel(random_mlp((2, 8, 8, 1), seed=6))
        batch = Batch(rng.normal(size=(8, 2)), rng.normal(size=(8, 2)))
        _, grad = model.loss_and_gradient(batch)
        assert relative_error(grad, fd_gradient(flat_loss(model, batch), model.flat_parameters())) < 1e-4

    def test_learned_hamiltonian(self, one_layer_hamiltonian):
        model = HNNModel(one_layer_hamiltonian)
        R = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(model.learned_hamiltonian(R), forward_numpy(one_layer_hamiltonian, R)[:, 0])

    def test_rejects_vector_output(self):
        with pytest.raises(ValueError):
            HNNModel(random_mlp((2, 4, 2)))


class TestGHNN:
    def test_identity_transform(self, one_layer_hamiltonian):
        params = GhnnParams(identity_transform(), one_layer_hamiltonian)
        r = np.array([0.7, -0.2])
        R, J = ghnn_transform(params, r)
        np.testing.assert_allclose(R, r)
        np.testing.assert_allclose(J, np.eye(2))
        np.testing.assert_allclose(
            ghnn_vector_field(params, r), hnn_vector_field(one_layer_hamiltonian, r), atol=1e-14
        )

    def test_permutation_transform(self, one_layer_hamiltonian, rng):
        params = GhnnParams(MlpParams.linear(SWAP), one_layer_hamiltonian)
        r = rng.normal(size=(4, 2))
        g = one_layer_gradient(one_layer_hamiltonian, r @ SWAP.T)
        expected = (g @ S2.T) @ np.linalg.inv(SWAP).T
        np.testing.assert_allclose(ghnn_vector_field(params, r), expected, atol=1e-13)

    def test_transform_jacobian_matches_finite_differences(self, rng):
        transform = random_mlp((2, 4, 4, 2), seed=7)
        params = GhnnParams(transform, random_mlp((2, 8, 8, 1), seed=8))
        r = rng.normal(size=2)
        _, J = ghnn_transform(params, r)
        assert relative_error(J, fd_jacobian(lambda x: forward_numpy(transform, x), r)) < 1e-6

    def test_canonical_positions_give_identity_block(self, rng):
        params = GhnnParams(random_mlp((4, 6, 4), seed=1), random_mlp((4, 6, 1), seed=2), canonical_positions=True)
        r = rng.normal(size=4)
        R, J = ghnn_transform(params, r)
        np.testing.assert_allclose(R[:2], r[:2])
        np.testing.assert_allclose(J[:2, :2], np.eye(2))
        np.testing.assert_allclose(J[:2, 2:], 0.0)

    def test_equals_hnn_loss_with_identity_transform(self, rng):
        hamiltonian = random_mlp((2, 8, 8, 1), seed=3)
        batch = Batch(rng.normal(size=(10, 2)), rng.normal(size=(10, 2)))
        params = GhnnParams(identity_transform(), hamiltonian)
        assert ghnn_loss(params, batch) == pytest.approx(hnn_loss(hamiltonian, batch), abs=1e-12)

    def test_exact_hamiltonian_data_gives_zero_loss(self, one_layer_hamiltonian, rng):
        R = rng.normal(size=(6, 2))
        batch = Batch(R, hnn_vector_field(one_layer_hamiltonian, R))
        assert ghnn_loss(GhnnParams(identity_transform(), one_layer_hamiltonian), batch) < 1e-28

    @pytest.mark.parametrize("through_inverse", [True, False])
    def test_loss_gradient_matches_finite_differences(self, rng, through_inverse):
        policy = JacobianInversePolicy.for_training(through_inverse=through_inverse)
        model = GHNNModel(random_mlp((2, 4, 4, 2), seed=9), random_mlp((2, 8, 8, 1), seed=10), policy=policy)
        batch = Batch(rng.normal(size=(6, 2)), rng.normal(size=(6, 2)))
        _, grad = model.loss_and_gradient(batch)
        reference = fd_gradient(flat_loss(model, batch), model.flat_parameters())
        if through_inverse:
            assert relative_error(grad, reference) < 1e-4
        else:
            # the Hamiltonian block is still exact when J is held constant
            n_transform = model.transform.parameter_count
            assert relative_error(grad[n_transform:], reference[n_transform:]) < 1e-4

    def test_pseudo_inverse_matches_exact_solve_when_well_conditioned(self, rng):
        transform, hamiltonian = random_mlp((2, 4, 2), seed=4), random_mlp((2, 6, 1), seed=5)
        r = rng.normal(size=(5, 2))
        exact = ghnn_vector_field(GhnnParams(transform, hamiltonian), r)
        pinv = ghnn_vector_field(
            GhnnParams(transform, hamiltonian), r, JacobianInversePolicy(mode=InversionMode.PSEUDO_INVERSE)
        )
        np.testing.assert_allclose(pinv, exact, atol=1e-10)

    def test_singular_jacobian_raises_when_forecasting(self, one_layer_hamiltonian):
        params = GhnnParams(MlpParams.linear([[1.0, 0.0], [1.0, 0.0]]), one_layer_hamiltonian)
        with pytest.raises(SingularJacobianError) as info:
            ghnn_vector_field(params, np.array([0.1, 0.2]))
        assert info.value.condition_numbers

    def test_skip_sample_drops_singular_rows(self, one_layer_hamiltonian):
        params = GhnnParams(tanh_transform(), one_layer_hamiltonian)
        batch = Batch([[0.1, 0.2], [20.0, 0.0], [-0.3, 0.5]], [[1.0, 0.0], [5.0, 5.0], [0.0, -1.0]])
        kept = ghnn_loss(params, batch.take([0, 2]))
        assert ghnn_loss(params, batch) == pytest.approx(kept, rel=1e-12)

    def test_all_rows_singular_exhausts_the_batch(self, one_layer_hamiltonian):
        params = GhnnParams(MlpParams.linear([[1.0, 0.0], [1.0, 0.0]]), one_layer_hamiltonian)
        with pytest.raises(BatchExhaustedError):
            ghnn_loss(params, Batch([[0.1, 0.2], [0.3, 0.4]], [[0.0, 0.0], [0.0, 0.0]]))

    def test_model_vector_field_never_skips(self, one_layer_hamiltonian):
        model = GHNNModel(tanh_transform(), one_layer_hamiltonian)
        assert model.policy.failure_action == FailureAction.SKIP_SAMPLE
        with pytest.raises(SingularJacobianError):
            model.vector_field(np.array([[0.1, 0.2], [20.0, 0.0]]))

    def test_learned_hamiltonian_uses_latent_coordinates(self, one_layer_hamiltonian):
        model = GHNNModel(MlpParams.linear(SWAP), one_layer_hamiltonian)
        r = np.array([[0.3, -0.1]])
        np.testing.assert_allclose(model.learned_hamiltonian(r), forward_numpy(one_layer_hamiltonian, r @ SWAP.T)[:, 0])


@pytest.mark.parametrize("model", [
    NNModel(random_mlp((2, 8, 2), seed=11)),
    HNNModel(random_mlp((2, 8, 8, 1), seed=12)),
    GHNNModel(random_mlp((2, 4, 4, 2), seed=9), random_mlp((2, 8, 8, 1), seed=10)),
], ids=['nn', 'hnn', 'ghnn'])
def test_loss_ignores_batch_order(model, rng):
    batch = Batch(rng.normal(size=(12, 2)), rng.normal(size=(12, 2)))
    shuffled = batch.take(rng.permutation(12))
    loss, grad = model.loss_and_gradient(batch)
    shuffled_loss, shuffled_grad = model.loss_and_gradient(shuffled)
    assert shuffled_loss == pytest.approx(loss, rel=1e-12)
    np.testing.assert_allclose(shuffled_grad, grad, rtol=1e-10, atol=1e-14)


class TestJacobianInversion:
    def test_identity(self):
        np.testing.assert_array_equal(invert_jacobian(np.eye(3), JacobianInversePolicy()), np.eye(3))

    def test_rotation(self):
        J = np.array([[0.0, 1.0], [-1.0, 0.0]])
        np.testing.assert_allclose(invert_jacobian(J, JacobianInversePolicy()), [[0.0, -1.0], [1.0, 0.0]])

    @pytest.mark.parametrize("mode", list(InversionMode))
    def test_random_well_conditioned(self, rng, mode):
        J = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        inverse = invert_jacobian(J, JacobianInversePolicy(mode=mode))
        assert np.max(np.abs(J @ inverse - np.eye(4))) < 1e-10

    def test_singular_under_exact_solve(self):
        with pytest.raises(SingularJacobianError):
            invert_jacobian(np.array([[1.0, 2.0], [2.0, 4.0]]), JacobianInversePolicy())

    def test_pseudo_inverse_of_singular_matrix(self):
        J = np.array([[1.0, 2.0], [2.0, 4.0]])
        inverse = invert_jacobian(J, JacobianInversePolicy(mode=InversionMode.PSEUDO_INVERSE))
        np.testing.assert_allclose(inverse, np.linalg.pinv(J), atol=1e-12)

    def test_condition_numbers(self):
        J = np.stack([np.eye(2), np.diag([1.0, 1e-3]), np.zeros((2, 2))])
        cond = condition_numbers(J)
        assert cond[0] == pytest.approx(1.0)
        assert cond[1] == pytest.approx(1e3)
        assert np.isinf(cond[2])

    @pytest.mark.parametrize("epsilon", [-1e-12, 1e-3, 0.5])
    def test_epsilon_range(self, epsilon):
        with pytest.raises(ConfigError, match="jacobian_policy.epsilon"):
            JacobianInversePolicy(epsilon=epsilon)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            JacobianInversePolicy(mode='cholesky')

    def test_policy_round_trip(self):
        policy = JacobianInversePolicy('pseudo_inverse', 1e-6, 'error', False)
        assert JacobianInversePolicy.from_dict(policy.to_dict()) == policy


class TestCheckpoints:
    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_round_trip_is_bit_exact(self, kind, rng):
        hidden = {'dynamics': [6], 'hamiltonian': [6, 6], 'transform': [4]}
        model = build_model(kind, 2, seed=3, hidden=hidden, canonical_positions=(kind == ModelKind.GHNN))
        restored = model_from_dict(json.loads(json.dumps(model.to_dict())))
        assert restored.kind == kind
        np.testing.assert_array_equal(restored.flat_parameters(), model.flat_parameters())
        r = rng.uniform(0.5, 1.5, size=(3, 2))
        np.testing.assert_array_equal(restored.vector_field(r), model.vector_field(r))

    def test_policy_survives_round_trip(self):
        policy = JacobianInversePolicy(mode='pseudo_inverse', epsilon=1e-8)
        model = build_model(ModelKind.GHNN, 2, hidden={'hamiltonian': [4], 'transform': [4]}, policy=policy)
        assert model_from_dict(model.to_dict()).policy == policy

    def test_not_a_checkpoint(self):
        with pytest.raises(ValueError):
            model_from_dict({'format': 'something-else'})

    def test_sub_networks_get_independent_seeds(self):
        model = build_model(ModelKind.GHNN, 2, seed=0, hidden={'hamiltonian': [2], 'transform': [2]})
        assert not np.array_equal(model.transform.weights[0], model.hamiltonian.weights[0])

    def test_dimension_mismatch(self, rng):
        model = build_model(ModelKind.NN, 2, hidden={'dynamics': [4]})
        with pytest.raises(ValueError):
            model.vector_field(rng.normal(size=4))

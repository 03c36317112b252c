import numpy as np
import pytest

from rotcert import cli, encode, vqc
from rotcert.rotnoise import NoiseConfig

REF = cli.default_config()


@pytest.fixture(scope="session")
def ref_data():
    s = REF["dataset"]["synthetic"]
    ds = encode.synth_dataset(s["n"], s["seed"], s["margin"])
    return encode.split_dataset(ds, REF["train_fraction"])


@pytest.fixture(scope="session")
def ref_model(ref_data):
    train_ds, _ = ref_data
    model0 = vqc.new_model(3, REF["ansatz_depth"], seed=REF["train"]["seed"])
    return vqc.train(model0, train_ds, vqc.TrainConfig(**REF["train"]))


@pytest.fixture(scope="session")
def ref_noise():
    return NoiseConfig(**REF["noise"])


@pytest.fixture(scope="session")
def test_states(ref_model, ref_data):
    _, test_ds = ref_data
    return [
        encode.encode_state(ref_model.encoding, x).density_matrix()
        for x in test_ds.features
    ]


@pytest.fixture(scope="session")
def exact_test_probs(ref_model, test_states):
    return np.array([vqc.predict_exact(ref_model, s) for s in test_states])

import json

import numpy as np
import pytest

from latentshield import checkpoint
from latentshield.attacks import TargetHyper, train_target
from latentshield.checkpoint import CheckpointError
from latentshield.labels import LabelerHyper, train_latent_classifier
from latentshield.numeric import RngStream
from latentshield.vae import decode, encode, init_vae


def test_vae_round_trip(tmp_path):
    model = init_vae(12, 3, RngStream(0), hidden=7)
    path = checkpoint.save_vae(tmp_path / "vae.bin", model, {"seed": 4})
    back = checkpoint.load_vae(path)
    assert all(np.array_equal(a, b) for a, b in zip(model.params(), back.params()))
    x = np.random.default_rng(0).uniform(size=(3, 12))
    assert np.array_equal(decode(model, encode(model, x)[0]), decode(back, encode(back, x)[0]))
    meta = json.loads((tmp_path / "vae.bin.json").read_text())
    assert meta["magic"] == "LSVAE1" and meta["seed"] == 4 and meta["second_dim"] == 3
    raw = path.read_bytes()
    assert raw[:6] == b"LSVAE1"
    # header + 5 layers of (3 uint32 + weights + bias)
    sizes = [(7, 12), (3, 7), (3, 7), (7, 3), (12, 7)]
    assert len(raw) == 6 + 12 + sum(12 + 8 * (r * c + r) for r, c in sizes)


def test_classifier_and_target_round_trip(tmp_path, toy_data):
    clf = train_latent_classifier(toy_data.images, toy_data.labels, LabelerHyper(epochs=1, hidden=4), RngStream(0))
    back = checkpoint.load_classifier(checkpoint.save_classifier(tmp_path / "c.bin", clf))
    assert np.array_equal(clf.predict_proba(toy_data.images), back.predict_proba(toy_data.images))
    tgt = train_target(toy_data, TargetHyper(epochs=1, hidden=4), RngStream(0))
    p = checkpoint.save_classifier(tmp_path / "t.bin", tgt, magic=checkpoint.TARGET_MAGIC)
    with pytest.raises(CheckpointError):
        checkpoint.load_classifier(p)
    assert checkpoint.load_classifier(p, magic=checkpoint.TARGET_MAGIC).num_classes == 3


def test_corrupt_checkpoints(tmp_path):
    raw = checkpoint.encode_layers(checkpoint.VAE_MAGIC, 4, 2, init_vae(4, 2, RngStream(0), hidden=3).layers())
    with pytest.raises(CheckpointError, match="magic"):
        checkpoint.decode_layers(b"XXXXXX" + raw[6:])
    with pytest.raises(CheckpointError, match="offset"):
        checkpoint.decode_layers(raw[:-5])
    with pytest.raises(CheckpointError, match="trailing"):
        checkpoint.decode_layers(raw + b"\0")
    with pytest.raises(CheckpointError):
        checkpoint.encode_layers(b"NOPE00", 1, 1, [])


def test_save_is_deterministic(tmp_path):
    model = init_vae(5, 2, RngStream(9), hidden=3)
    a = checkpoint.save_vae(tmp_path / "a.bin", model).read_bytes()
    b = checkpoint.save_vae(tmp_path / "b.bin", model).read_bytes()
    assert a == b

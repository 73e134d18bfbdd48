import struct

import numpy as np
import pytest

from rmvhash import dataset, hash_trainer, model_io
from rmvhash.hash_trainer import GraphConfig, HyperParams, KernelSelectConfig, OosConfig
from rmvhash.model_io import ModelFileError


def trained(seed=0):
    ds = dataset.synth_multiview(3, 20, (8, 10), seed=seed)
    model, _, Khat, _ = hash_trainer.train(
        ds,
        HyperParams(P=8, outer_iters=5),
        graph_cfg=GraphConfig(L=10, k=3),
        kernel_cfg=KernelSelectConfig(R=10),
        oos_cfg=OosConfig(Z=20, k_oos=10),
        seed=seed,
    )
    return ds, model, Khat


class TestRoundTrip:
    def test_bitwise_round_trip(self, tmp_path):
        _, model, Khat = trained(seed=1)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path, config_snapshot={"bits": 8, "seed": 1})
        back, snapshot = model_io.load_model(path)
        np.testing.assert_array_equal(back.W, model.W)
        np.testing.assert_array_equal(back.b, model.b)
        for a, b in zip(back.landmarks.blocks, model.landmarks.blocks):
            np.testing.assert_array_equal(a, b)
        assert back.kernel_config.sigmas == model.kernel_config.sigmas
        assert back.kernel_config.sigma_concat == model.kernel_config.sigma_concat
        np.testing.assert_array_equal(back.base_set.centers, model.base_set.centers)
        np.testing.assert_array_equal(
            back.base_set.embeddings, model.base_set.embeddings
        )
        assert back.base_set.sigma == model.base_set.sigma
        assert snapshot == {"bits": 8, "seed": 1}

    def test_loaded_model_encodes_identically(self, tmp_path):
        ds, model, Khat = trained(seed=2)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path)
        back, _ = model_io.load_model(path)
        np.testing.assert_array_equal(
            hash_trainer.encode_database(back, Khat),
            hash_trainer.encode_database(model, Khat),
        )
        x_views = [v[:, 3] for v in ds.views]
        np.testing.assert_array_equal(
            hash_trainer.encode_query(back, x_views),
            hash_trainer.encode_query(model, x_views),
        )

    def test_save_is_deterministic(self, tmp_path):
        _, model, _ = trained(seed=3)
        a = tmp_path / "a.rmvm"
        b = tmp_path / "b.rmvm"
        model_io.save_model(model, a)
        model_io.save_model(model, b)
        assert a.read_bytes() == b.read_bytes()


class TestCorruption:
    def test_truncated_file(self, tmp_path):
        _, model, _ = trained(seed=4)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path)
        path.write_bytes(path.read_bytes()[:50])
        with pytest.raises(ModelFileError, match="checksum|truncated"):
            model_io.load_model(path)

    def test_flipped_byte_fails_checksum(self, tmp_path):
        _, model, _ = trained(seed=5)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[30] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ModelFileError, match="checksum"):
            model_io.load_model(path)

    def test_bad_magic(self, tmp_path):
        _, model, _ = trained(seed=6)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        # refresh the checksum so only the magic check trips
        import hashlib

        body = bytes(raw[:-8])
        path.write_bytes(body + hashlib.sha256(body).digest()[:8])
        with pytest.raises(ModelFileError, match="magic"):
            model_io.load_model(path)

    def test_newer_version_names_both(self, tmp_path):
        _, model, _ = trained(seed=7)
        path = tmp_path / "m.rmvm"
        model_io.save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 99)
        import hashlib

        body = bytes(raw[:-8])
        path.write_bytes(body + hashlib.sha256(body).digest()[:8])
        with pytest.raises(ModelFileError, match=r"99.*1"):
            model_io.load_model(path)

    def test_tiny_file(self, tmp_path):
        path = tmp_path / "m.rmvm"
        path.write_bytes(b"RM")
        with pytest.raises(ModelFileError, match="short"):
            model_io.load_model(path)

# -*- coding: utf-8 -*-

import struct

import numpy as np
import pytest

from cicstone.core.checkpoint import MAGIC, Checkpoint, checksum, load_checkpoint, save_checkpoint
from cicstone.core.errors import ContractError, CorruptionError


def _checkpoint():
    arrays = {"net.0.weight": np.arange(6.0).reshape(2, 3), "net.0.bias": np.array([0.5, -0.5]),
              "scalar": np.array(3.0)}
    metadata = {"agent": "cic", "env": "pointmass", "task": "reach_ne", "phase": "pretrain", "step": 12}
    return Checkpoint("[env]\nkind = pointmass\n", metadata, arrays)


def test_layout_header():
    encoded = _checkpoint().encoded()
    assert encoded[:4] == MAGIC
    assert struct.unpack("<I", encoded[4:8])[0] == 1
    assert encoded[-8:] == checksum(encoded[:-8])


def test_save_and_load(tmp_path):
    path = str(tmp_path / "checkpoint.cick")
    encoded = save_checkpoint(path, _checkpoint())
    restored = load_checkpoint(path)
    assert restored.config_text == "[env]\nkind = pointmass\n"
    assert restored.metadata["step"] == 12
    assert restored.metadata["skill"] is None
    assert np.array_equal(restored.arrays["net.0.weight"], np.arange(6.0).reshape(2, 3))
    assert restored.arrays["scalar"].shape == ()
    assert restored.encoded() == encoded


def test_identical_inputs_give_identical_bytes():
    assert _checkpoint().encoded() == _checkpoint().encoded()


def test_flipped_byte_is_detected():
    encoded = bytearray(_checkpoint().encoded())
    encoded[40] ^= 0xFF
    with pytest.raises(CorruptionError, match="checksum"):
        Checkpoint.decode(bytes(encoded))


def test_bad_magic():
    encoded = b"XXXX" + _checkpoint().encoded()[4:]
    with pytest.raises(CorruptionError, match="magic"):
        Checkpoint.decode(encoded)


def test_version_gate():
    body = bytearray(_checkpoint().encoded()[:-8])
    body[4:8] = struct.pack("<I", 2)
    with pytest.raises(CorruptionError, match="version 2"):
        Checkpoint.decode(bytes(body) + checksum(bytes(body)))


@pytest.mark.parametrize("metadata, field", [
    ({"step": "twelve"}, "step"),
    ({"step": True}, "step"),
    ({"step": -1}, "step"),
    ({"phase": "warmup"}, "phase"),
    ({"skill": [1, 0]}, "skill"),
    ({"agent": 3}, "agent"),
    ({"seed": 1}, "seed"),
])
def test_bad_metadata_names_the_field(metadata, field):
    with pytest.raises(ContractError, match=field):
        Checkpoint("", metadata, {})


def test_skill_metadata_survives_a_round_trip():
    checkpoint = Checkpoint("", {"phase": "finetune", "step": 0, "skill": [0.25, 0.75]}, {})
    assert Checkpoint.decode(checkpoint.encoded()).metadata["skill"] == [0.25, 0.75]


def test_bad_metadata_on_disk_is_corruption():
    checkpoint = _checkpoint()
    checkpoint.metadata["phase"] = "warmup"
    with pytest.raises(CorruptionError, match="phase"):
        Checkpoint.decode(checkpoint.encoded())

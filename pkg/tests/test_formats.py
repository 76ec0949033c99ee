"""Binary container round trips and rejection of malformed files."""

import wave

import numpy as np
import pytest

from augpipe import feats


def test_fmb_roundtrip(tmp_path):
    mat = np.random.default_rng(0).normal(size=(17, 40)).astype(np.float32)
    path = tmp_path / "x.fmb"
    feats.write_features(path, mat)
    assert np.array_equal(feats.read_features(path), mat)


def test_fmb_header_layout(tmp_path):
    path = tmp_path / "x.fmb"
    feats.write_features(path, np.zeros((2, 3), dtype=np.float32))
    raw = path.read_bytes()
    assert raw[:4] == b"FMB1"
    assert int.from_bytes(raw[4:8], "little") == 2
    assert int.from_bytes(raw[8:12], "little") == 3
    assert len(raw) == 12 + 2 * 3 * 4


def test_fmb_bad_magic(tmp_path):
    path = tmp_path / "x.fmb"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="bad magic"):
        feats.read_features(path)


def test_fmb_truncated(tmp_path):
    good = tmp_path / "g.fmb"
    feats.write_features(good, np.ones((4, 4), dtype=np.float32))
    bad = tmp_path / "b.fmb"
    bad.write_bytes(good.read_bytes()[:-5])
    with pytest.raises(ValueError, match="truncated"):
        feats.read_features(bad)


def test_wav_roundtrip(tmp_path):
    samples = np.random.default_rng(1).integers(-3000, 3000, 800).astype(np.int16)
    path = tmp_path / "a.wav"
    feats.write_wav(path, feats.AudioBuffer(samples, 16000))
    back = feats.read_wav(path)
    assert back.sample_rate == 16000
    assert np.array_equal(back.samples, samples)


def test_wav_rejects_stereo(tmp_path):
    path = tmp_path / "st.wav"
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(8000)
        wf.writeframes(b"\x00" * 400)
    with pytest.raises(ValueError, match="mono"):
        feats.read_wav(path)


def test_wav_rejects_8bit(tmp_path):
    path = tmp_path / "b8.wav"
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(1)
        wf.setframerate(8000)
        wf.writeframes(b"\x00" * 400)
    with pytest.raises(ValueError, match="16-bit"):
        feats.read_wav(path)


def test_wav_rejects_non_riff(tmp_path):
    path = tmp_path / "x.wav"
    path.write_bytes(b"OggS" + b"\x00" * 64)
    with pytest.raises(ValueError, match="WAV"):
        feats.read_wav(path)


def test_wav_rejects_compressed_codec(tmp_path):
    # hand-built RIFF header claiming mu-law (format tag 7)
    import struct

    data = b"\x00" * 32
    hdr = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 7, 1, 8000, 8000, 1, 8)
    body = b"data" + struct.pack("<I", len(data)) + data
    path = tmp_path / "mulaw.wav"
    path.write_bytes(hdr + fmt + body)
    with pytest.raises(ValueError):
        feats.read_wav(path)

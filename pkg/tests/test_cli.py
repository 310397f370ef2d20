import json

import numpy as np
import pytest
import soundfile as sf
from click.testing import CliRunner

from src.bitstream.stream import TokenStream, pack
from src.cli import cli
from src.codec.serialization import save_model
from src.utils.audio_io import WavFileHandler


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def fsq_model_path(tmp_path, fsq_model):
    path = tmp_path / "fsq.scmk"
    path.write_bytes(save_model(fsq_model))
    return str(path)


@pytest.fixture
def short_wav(tmp_path, speech_factory):
    return WavFileHandler.write(str(tmp_path / "short.wav"), speech_factory(3, num_hops=20))


def _lines(result):
    return result.output.splitlines()


def test_version_command(runner):
    result = runner.invoke(cli, ['version'])
    assert result.exit_code == 0
    assert "spectral-codec version" in result.output


def test_variants_command(runner):
    result = runner.invoke(cli, ['variants'])
    assert result.exit_code == 0
    for key in ("fsq", "rvq", "none"):
        assert f"{key}:" in result.output


def test_info_on_stream(runner, tmp_path):
    path = tmp_path / "four.spct"
    stream = TokenStream.from_tokens(np.zeros((4, 8), dtype=np.int64), 44100, 512, 1000, 10)
    path.write_bytes(pack(stream))
    result = runner.invoke(cli, ['info', str(path)])
    assert result.exit_code == 0
    lines = _lines(result)
    for expected in ("kind=stream", "frames=4", "codebooks=8", "bits=10", "bitrate_bps=6890.6"):
        assert expected in lines


def test_info_on_model(runner, fsq_model_path):
    result = runner.invoke(cli, ['info', fsq_model_path])
    assert result.exit_code == 0
    lines = _lines(result)
    assert "variant=fsq" in lines
    assert "embedding_dim=32" in lines
    assert "bitrate_bps=6890.6" in lines


def test_info_rejects_unknown_files(runner, tmp_path):
    path = tmp_path / "notes.txt"
    path.write_bytes(b"hello")
    result = runner.invoke(cli, ['info', str(path)])
    assert result.exit_code == 2
    assert "neither a token stream nor a codec model" in result.output


def test_eval_identical_files(runner, short_wav):
    result = runner.invoke(cli, ['eval', short_wav, short_wav])
    assert result.exit_code == 0
    lines = _lines(result)
    assert "si_sdr_db=100.0" in lines
    assert "mel_distance=0.0" in lines
    assert not any(line.startswith("bitrate_bps") for line in lines)


def test_eval_writes_json(runner, short_wav, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(cli, ['eval', short_wav, short_wav, '--json-out', str(out)])
    assert result.exit_code == 0
    data = json.loads(out.read_text())
    assert data["reports"]["short.wav"]["si_sdr_db"] == 100.0


def test_encode_with_unquantized_model_fails(runner, tmp_path, none_model, short_wav):
    model_path = tmp_path / "none.scmk"
    model_path.write_bytes(save_model(none_model))
    result = runner.invoke(cli, ['encode', short_wav, '--model', str(model_path), '--out', str(tmp_path / "x.spct")])
    assert result.exit_code == 2
    assert "unquantized model has no tokens" in result.output


def test_encode_then_decode(runner, tmp_path, fsq_model_path, short_wav):
    spct = str(tmp_path / "short.spct")
    result = runner.invoke(cli, ['encode', short_wav, '--model', fsq_model_path, '--out', spct])
    assert result.exit_code == 0
    lines = _lines(result)
    assert "frames=21" in lines
    assert "token_rate=86.13 tokens/s" in lines
    assert "bitrate=6890.6 bps" in lines

    out_wav = str(tmp_path / "decoded" / "short.wav")
    result = runner.invoke(cli, ['decode', spct, '--model', fsq_model_path, '--out', out_wav, '--gl-iters', '4'])
    assert result.exit_code == 0
    assert "samples=10240" in _lines(result)
    assert "duration=0.232 s" in _lines(result)
    info = sf.info(out_wav)
    assert info.subtype == "PCM_16"
    assert info.channels == 1
    assert info.samplerate == 44100

    result = runner.invoke(cli, ['eval', short_wav, out_wav, '--stream', spct])
    assert result.exit_code == 0
    assert "bitrate_bps=6890.6" in _lines(result)


def test_missing_model_is_an_io_error(runner, tmp_path, short_wav):
    result = runner.invoke(
        cli, ['encode', short_wav, '--model', str(tmp_path / "absent.scmk"), '--out', str(tmp_path / "x.spct")]
    )
    assert result.exit_code == 1
    assert "Error:" in result.output


def test_fit_rvq_with_stats(runner, tmp_path, speech_factory):
    corpus_dir = tmp_path / "corpus"
    for seed in range(3):
        WavFileHandler.write(str(corpus_dir / f"clip{seed}.wav"), speech_factory(40 + seed, num_hops=100))
    out_model = tmp_path / "rvq.scmk"
    stats_out = tmp_path / "stats.json"
    result = runner.invoke(cli, [
        'fit', str(corpus_dir), '--out', str(out_model), '--variant', 'rvq',
        '--rvq-stages', '2', '--rvq-size', '8', '--stats-out', str(stats_out), '--workers', '2',
    ])
    assert result.exit_code == 0, result.output
    lines = _lines(result)
    assert "files=3" in lines
    assert "frames=303" in lines
    assert any(line.startswith("codebook_1=used") for line in lines)
    assert out_model.read_bytes()[:4] == b"SCMK"
    stats = json.loads(stats_out.read_text())
    assert stats["variant"] == "rvq"
    assert len(stats["codebooks"]) == 2

    info = runner.invoke(cli, ['info', str(out_model)])
    assert "codebooks=2" in _lines(info)
    assert "codebook_size=8" in _lines(info)


def test_fit_rejects_mixed_sample_rates(runner, tmp_path, speech_factory):
    corpus_dir = tmp_path / "corpus"
    WavFileHandler.write(str(corpus_dir / "a.wav"), speech_factory(1, num_hops=40))
    WavFileHandler.write(str(corpus_dir / "b.wav"), speech_factory(2, num_hops=40, sample_rate=22050))
    result = runner.invoke(cli, ['fit', str(corpus_dir), '--out', str(tmp_path / "m.scmk")])
    assert result.exit_code == 2
    assert "b.wav (22050 Hz)" in result.output


def test_fit_rejects_bad_levels(runner, tmp_path):
    result = runner.invoke(cli, ['fit', str(tmp_path), '--out', str(tmp_path / "m.scmk"), '--fsq-levels', '8,x'])
    assert result.exit_code == 2
    assert "comma-separated" in result.output


def test_malformed_env_setting_is_a_validation_error(runner, monkeypatch, tmp_path, fsq_model_path):
    monkeypatch.setenv("SPECTRAL_CODEC_GL_ITERS", "many")
    stream = TokenStream.from_tokens(np.zeros((4, 8), dtype=np.int64), 44100, 512, 1000, 10)
    spct = tmp_path / "four.spct"
    spct.write_bytes(pack(stream))
    result = runner.invoke(cli, ['decode', str(spct), '--model', fsq_model_path, '--out', str(tmp_path / "x.wav")])
    assert result.exit_code == 2
    assert "SPECTRAL_CODEC_GL_ITERS" in result.output

    result = runner.invoke(
        cli, ['decode', str(spct), '--model', fsq_model_path, '--out', str(tmp_path / "x.wav"), '--gl-iters', '2']
    )
    assert result.exit_code == 0


def test_eval_directories(runner, tmp_path, speech_factory):
    ref_dir, est_dir = tmp_path / "ref", tmp_path / "est"
    for seed in range(3):
        audio = speech_factory(60 + seed, num_hops=30)
        WavFileHandler.write(str(ref_dir / f"{seed}.wav"), audio)
        WavFileHandler.write(str(est_dir / f"{seed}.wav"), audio)
    out = tmp_path / "summary.json"
    result = runner.invoke(cli, ['eval', str(ref_dir), str(est_dir), '--json-out', str(out)])
    assert result.exit_code == 0, result.output
    assert "files=3" in _lines(result)
    assert "si_sdr_db=100.0 ± 0.0" in result.output
    data = json.loads(out.read_text())
    assert set(data["reports"]) == {"0.wav", "1.wav", "2.wav"}
    assert "summary" in data

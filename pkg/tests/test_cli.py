import json

import numpy as np
import pytest

from vfrtok import io
from vfrtok.cli import EXIT_FORMAT, EXIT_OK, EXIT_VALIDATION, main
from vfrtok.core import FrameSequence, TokenSequence


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out.strip().splitlines()
    return code, (json.loads(out[-1]) if out else None)


def test_bitrate_from_rate(capsys):
    code, out = run(capsys, "bitrate", "--rate", 14.4, "--L", 32, "--K", 4)
    assert code == EXIT_OK
    assert out["bitrate_bps"] == pytest.approx(921.6)
    code, out = run(capsys, "bitrate", "--rate", 10, "--L", 1, "--K", 2, "--max-gap", 64)
    assert out["duration_overhead_bps"] == 60.0


def test_boundaries(tmp_path, capsys):
    h = tmp_path / "h.dycf"
    io.write_frames(h, FrameSequence(np.array([0.2, 0.6, 0.1, 0.7])[:, None]))
    code, out = run(capsys, "boundaries", h, "--tau-h", 0.5, "--min-gap", 1)
    assert code == EXIT_OK and out["ends"] == [1, 3]
    code, out = run(capsys, "boundaries", h, "--min-gap", 3)
    assert out["ends"] == [3]


def test_durations(tmp_path, capsys):
    mu = tmp_path / "mu.dycf"
    io.write_frames(mu, FrameSequence(np.array([1.0, 2.0, 4.0])[:, None]))
    code, out = run(capsys, "durations", mu, "--T", 10)
    assert code == EXIT_OK and out["durations"] == [2, 3, 5]
    code, out = run(capsys, "durations", mu)
    assert out["durations"] == [2, 3, 5]
    tok = tmp_path / "t.dyct"
    io.write_tokens(tok, TokenSequence(np.zeros((3, 2)), levels=4))
    code, _ = run(capsys, "durations", mu, "--T", 10, "--tokens", tok, "--out", tmp_path / "o.dyct")
    assert code == EXIT_OK
    assert io.read_tokens(tmp_path / "o.dyct").durations == (2, 3, 5)
    code, _ = run(capsys, "durations", mu, "--T", 2)
    assert code == EXIT_VALIDATION


def test_encode_decode_round_trip(tmp_path, capsys):
    x = tmp_path / "x.dycf"
    al = tmp_path / "a.tsv"
    code, out = run(capsys, "synth", "periodic", "--T", 40, "--period", 4, "--dim", 6, "--out", x, "--alignment", al)
    assert code == EXIT_OK and out["num_chunks"] == 10
    t = tmp_path / "t.dyct"
    code, out = run(capsys, "encode", x, "--alignment", al, "--out", t, "--L", 8, "--K", 4)
    assert code == EXIT_OK and out["num_tokens"] == 10
    assert out["frame_rate_hz"] == pytest.approx(12.5)
    y = tmp_path / "y.dycf"
    code, out = run(capsys, "decode", t, "--dim", 6, "--L", 8, "--K", 4, "--out", y)
    assert code == EXIT_OK and io.read_frames(y).data.shape == (40, 6)
    code, out = run(capsys, "bitrate", t)
    assert out["bitrate_bps"] == pytest.approx(12.5 * 16)


def test_encode_from_hazard_and_length_mode(tmp_path, capsys):
    x = tmp_path / "x.dycf"
    run(capsys, "synth", "periodic", "--T", 30, "--dim", 4, "--out", x)
    h = tmp_path / "h.dycf"
    io.write_frames(h, FrameSequence(np.random.default_rng(0).uniform(size=(30, 1))))
    t = tmp_path / "t.dyct"
    code, _ = run(capsys, "encode", x, "--hazard", h, "--mode", "length", "--out", t, "--L", 4, "--min-gap", 2)
    assert code == EXIT_OK
    assert io.read_tokens(t).total_frames == 30
    y = tmp_path / "y.dycf"
    code, out = run(capsys, "decode", t, "--mode", "length", "--dim", 4, "--L", 4, "--out", y)
    assert out["num_frames"] == 30
    code, out = run(capsys, "decode", t, "--mode", "length", "--target-T", 45, "--dim", 4, "--L", 4, "--out", y)
    assert out["num_frames"] == 45


def test_rad_commands(tmp_path, capsys):
    pool, ids, idx = tmp_path / "p.dycf", tmp_path / "p.ids", tmp_path / "i.dyci"
    code, _ = run(capsys, "synth", "clustered-latents", "--clusters", 4, "--M", 100, "--dim", 8, "--out", pool, "--ids", ids)
    assert code == EXIT_OK
    code, out = run(capsys, "rad-build", pool, "--ids", ids, "--n-list", 4, "--out", idx)
    assert code == EXIT_OK and out["num_vectors"] == 100
    assert idx.read_bytes()[:4] == b"DYCI"
    out_f = tmp_path / "o.dycf"
    code, out = run(capsys, "rad-apply", pool, "--pool", pool, "--index", idx, "--tau", 99, "--n-probe", 4, "--out", out_f)
    assert code == EXIT_OK and out["replaced"] == 100
    code, out = run(capsys, "rad-apply", pool, "--pool", pool, "--index", idx, "--tau", 101, "--out", out_f)
    assert out["replaced"] == 0


def test_synth_other_kinds(tmp_path, capsys):
    code, out = run(capsys, "synth", "nb-durations", "--n", 500, "--out", tmp_path / "d.dycf")
    assert code == EXIT_OK and io.read_frames(tmp_path / "d.dycf").num_frames == 500
    code, out = run(capsys, "synth", "alignment", "--n", 12, "--out", tmp_path / "a.tsv")
    assert code == EXIT_OK and out["num_spans"] >= 12


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.dycf"
    bad.write_bytes(b"XXXX" + bytes(12))
    assert main(["boundaries", str(bad)]) == EXIT_FORMAT
    assert main(["boundaries", str(tmp_path / "missing")]) == EXIT_VALIDATION
    assert main(["bitrate", "--rate", "0"]) == EXIT_VALIDATION
    assert main(["nonsense"]) == EXIT_VALIDATION
    h = tmp_path / "h.dycf"
    io.write_frames(h, FrameSequence(np.ones((3, 2))))
    assert main(["boundaries", str(h)]) == EXIT_VALIDATION
    assert main(["boundaries", str(h), "--tau-h", "2"]) == EXIT_VALIDATION


def test_decode_infers_mode_from_side_info(tmp_path, capsys):
    x, a, t = tmp_path / "x.dycf", tmp_path / "a.tsv", tmp_path / "t.dyct"
    run(capsys, "synth", "periodic", "--T", 60, "--period", 4, "--dim", 6, "--out", x, "--alignment", a)
    run(capsys, "encode", x, "--alignment", a, "--mode", "length", "--L", 4, "--K", 3, "--out", t)
    code, out = run(capsys, "decode", t, "--dim", 6, "--out", tmp_path / "y.dycf")
    assert code == EXIT_OK and out["num_frames"] == 60
    # forcing free decoding with no duration model gives one frame per token
    code, out = run(capsys, "decode", t, "--dim", 6, "--mode", "tokens", "--out", tmp_path / "z.dycf")
    assert out["num_frames"] == 15

import json

import numpy as np
import pytest

from sparsexcorr import PacketFormatError, SampledSignal, cli, fileio
from sparsexcorr.sensing import compress_buffered


@pytest.fixture
def runner(capsys):
    def run(argv, expect=0):
        code = cli.main(argv)
        captured = capsys.readouterr()
        assert code == expect, captured.err or captured.out
        return captured
    return run


class TestSignalFiles:
    def test_binary_round_trip(self, tmp_path):
        sig = SampledSignal(np.random.default_rng(0).standard_normal(64).astype(np.float32),
                            15000)
        path = tmp_path / "sig.sxs"
        fileio.write_signal(path, sig)
        back = fileio.read_signal(path)
        assert back.fs == 15000
        np.testing.assert_array_equal(back.samples, sig.samples)

    def test_csv_round_trip(self, tmp_path):
        sig = SampledSignal(np.array([1.25, -0.5, 3.0]), 8000)
        path = tmp_path / "sig.csv"
        fileio.write_signal(path, sig)
        back = fileio.read_signal(path, fs=8000)
        np.testing.assert_array_equal(back.samples, sig.samples)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "sig.sxs"
        path.write_bytes(b"XXXX" + bytes(12))
        with pytest.raises(PacketFormatError):
            fileio.read_signal(path)

    def test_packet_directory_round_trip(self, tmp_path):
        x = SampledSignal(np.random.default_rng(1).standard_normal(64), 1000)
        packets = compress_buffered(x, 4, 0.5, seed=8)
        fileio.write_packets(tmp_path / "pk", packets)
        back = fileio.read_packets(tmp_path / "pk")
        assert [p.buffer_index for p in back] == [0, 1, 2, 3]


class TestCliPipeline:
    def test_gen_compress_range_round_trip(self, tmp_path, runner):
        chirp = tmp_path / "chirp.sxs"
        trace = tmp_path / "trace.sxs"
        pkts = tmp_path / "packets"

        runner(["gen", "chirp", "--f-start", "3000", "--f-end", "7000",
                "--duration", "0.01", "--fs", "15000", "-o", str(chirp)])
        out = runner(["gen", "trace", "--ref", str(chirp), "--t-a", "0.04",
                      "--delay", "220", "--snr-db", "25", "--seed", "7",
                      "-o", str(trace)])
        truth = json.loads(out.out)["truth_lag"]
        assert truth == 220

        runner(["compress", "--signal", str(trace), "--alpha", "0.3",
                "--ref", str(chirp), "--seed", "11", "-o", str(pkts)])
        out = runner(["range", "--packets", str(pkts), "--ref", str(chirp),
                      "--method", "STRUCT_SXCORR", "--sigma", "3"])
        result = json.loads(out.out)
        assert result["delay_samples_int"] == truth

    def test_recover_emits_csv(self, tmp_path, runner):
        chirp = tmp_path / "chirp.sxs"
        trace = tmp_path / "trace.sxs"
        pkts = tmp_path / "packets"
        coeffs = tmp_path / "coeffs.csv"
        runner(["gen", "chirp", "--f-start", "3000", "--f-end", "7000",
                "--duration", "0.01", "--fs", "15000", "-o", str(chirp)])
        runner(["gen", "trace", "--ref", str(chirp), "--t-a", "0.04",
                "--delay", "100", "-o", str(trace)])
        runner(["compress", "--signal", str(trace), "--alpha", "0.5",
                "--buffers", "4", "-o", str(pkts)])
        runner(["recover", "--packets", str(pkts), "--ref", str(chirp),
                "-o", str(coeffs)])
        assert coeffs.read_text().startswith("buffer,lag,value")

    def test_missing_file_exits_nonzero(self, capsys):
        code = cli.main(["compress", "--signal", "/nonexistent.sxs",
                         "--buffers", "2", "-o", "/tmp/x"])
        assert code != 0
        err = json.loads(capsys.readouterr().err)
        assert err["error"] in ("io", "format")

    def test_malformed_packet_reports_format_error(self, tmp_path, capsys):
        chirp = tmp_path / "chirp.sxs"
        cli.main(["gen", "chirp", "--f-start", "3000", "--f-end", "7000",
                  "--duration", "0.01", "--fs", "15000", "-o", str(chirp)])
        capsys.readouterr()
        bad = tmp_path / "packets"
        bad.mkdir()
        (bad / "pkt_0000.sxp").write_bytes(b"garbage")
        code = cli.main(["range", "--packets", str(bad), "--ref", str(chirp)])
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "format"

    def test_help_lists_subcommands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for name in ("gen", "compress", "recover", "range", "sweep", "timing",
                     "localize", "profile"):
            assert name in out

    def test_profile_subcommand(self, tmp_path, runner):
        chirp = tmp_path / "chirp.sxs"
        trace = tmp_path / "trace.sxs"
        prof = tmp_path / "profile.csv"
        runner(["gen", "chirp", "--f-start", "3000", "--f-end", "7000",
                "--duration", "0.01", "--fs", "15000", "-o", str(chirp)])
        runner(["gen", "trace", "--ref", str(chirp), "--t-a", "0.04",
                "--delay", "150", "--snr-db", "20", "--preset", "CASE_C",
                "-o", str(trace)])
        runner(["profile", "--signal", str(trace), "--ref", str(chirp),
                "-o", str(prof)])
        lines = prof.read_text().strip().splitlines()
        assert lines[0].startswith("domain,")
        assert len(lines) == 4


class TestSweepCli:
    def test_sweep_reproducible_modulo_timestamp(self, tmp_path, runner):
        cfg = {
            "methods": ["SXCORR", "STRUCT_SXCORR"],
            "alphas": [0.3],
            "snr_buckets": [[20, 30]],
            "presets": ["CASE_A"],
            "trials": 3,
            "seed": 5,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        runner(["sweep", "--config", str(cfg_path), "-o", str(out1)])
        runner(["sweep", "--config", str(cfg_path), "-o", str(out2)])
        body1 = out1.read_text().splitlines()[1:]
        body2 = out2.read_text().splitlines()[1:]
        assert body1 == body2
        assert out1.read_text().splitlines()[0].startswith("# generated")

    def test_localize_cli(self, tmp_path, runner):
        scenario = {"rounds": 2, "methods": ["XCORR"], "snr_db": 25.0}
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario))
        out = tmp_path / "loc.csv"
        captured = runner(["localize", "--scenario", str(path), "-o", str(out)])
        summary = json.loads(captured.out)
        assert summary["rows"] == 2
        assert out.exists()

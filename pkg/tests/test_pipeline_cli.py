import csv
import os

import numpy as np
import pytest

from stylefuse.cli import main
from stylefuse.config import build_pipeline_config, parse_config_file
from stylefuse.errors import ContractError
from stylefuse.imageio import load_image
from stylefuse.inversion import InversionConfig
from stylefuse.pipeline import (PipelineConfig, PipelineError, TransferJob,
                                load_style, run_transfer, save_style)


def fast_config(**overrides):
    return PipelineConfig(inversion=InversionConfig(iterations=2), **overrides)


def make_job(pair, out_path):
    return TransferJob(
        identity_image=pair["identity"],
        expression_image=pair["expression"],
        identity_landmarks=pair["identity_landmarks"],
        expression_landmarks=pair["expression_landmarks"],
        output_path=str(out_path),
    )


class TestRunTransfer:
    def test_smoke_and_stage_artifacts(self, fixture_pair, tmp_path):
        keep = tmp_path / "stages"
        job = make_job(fixture_pair, tmp_path / "out.png")
        result = run_transfer(job, fast_config(keep_stages=str(keep)))
        assert os.path.exists(job.output_path)
        assert result.composite.shape == load_image(fixture_pair["identity"]).shape
        # every kept artifact is reloadable through the public loaders
        for name in ("rectified_identity.png", "rectified_expression.png",
                     "regenerated.png", "warped.png", "mask.png"):
            assert load_image(keep / name).shape[0] == 3
        for name in ("identity_style.ntws", "expression_style.ntws",
                     "fused_style.ntws"):
            assert load_style(keep / name).layers == 8
        with open(keep / "identity_trace.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "loss"]
        assert len(rows) == 1 + 2 + 1  # header + iterations + initial entry

    def test_untouched_outside_feathered_mask(self, fixture_pair, tmp_path):
        job = make_job(fixture_pair, tmp_path / "out.png")
        result = run_transfer(job, fast_config())
        identity = load_image(fixture_pair["identity"])
        outside = result.stages["mask"] == 0.0
        assert outside.any()
        np.testing.assert_array_equal(result.composite[:, outside],
                                      identity[:, outside])

    def test_deterministic(self, fixture_pair, tmp_path):
        job = make_job(fixture_pair, tmp_path / "out.png")
        a = run_transfer(job, fast_config())
        b = run_transfer(job, fast_config())
        np.testing.assert_array_equal(a.composite, b.composite)

    def test_missing_input_named(self, fixture_pair, tmp_path):
        job = make_job(fixture_pair, tmp_path / "out.png")
        job.identity_image = str(tmp_path / "nope.png")
        with pytest.raises(PipelineError) as exc:
            run_transfer(job, fast_config())
        assert exc.value.stage == "inputs"
        assert "nope.png" in str(exc.value)

    def test_corrupt_landmarks_fail_in_load_stage(self, fixture_pair, tmp_path):
        bad = tmp_path / "bad_landmarks.json"
        bad.write_text("{ not json")
        job = make_job(fixture_pair, tmp_path / "out.png")
        job.identity_landmarks = str(bad)
        with pytest.raises(PipelineError) as exc:
            run_transfer(job, fast_config())
        assert exc.value.stage == "load"

    def test_search_mode_runs(self, fixture_pair, tmp_path):
        job = make_job(fixture_pair, tmp_path / "out.png")
        result = run_transfer(job, fast_config(fusion_mode="search"))
        assert len(result.mask.take_from_expression) >= 1

    def test_saved_weights_match_seeded_weights(self, fixture_pair, tmp_path):
        job = make_job(fixture_pair, tmp_path / "a.png")
        seeded = run_transfer(job, fast_config())
        job2 = make_job(fixture_pair, tmp_path / "b.png")
        from_file = run_transfer(job2,
                                 fast_config(weights_path=fixture_pair["weights"]))
        np.testing.assert_array_equal(seeded.composite, from_file.composite)


class TestStyleIO:
    def test_roundtrip(self, tmp_path, fixture_pair):
        path = tmp_path / "style.ntws"
        save_style(fixture_pair["style1"], path)
        np.testing.assert_array_equal(load_style(path).values,
                                      fixture_pair["style1"].values)

    def test_missing_entry(self, tmp_path):
        from stylefuse import ntws
        path = tmp_path / "other.ntws"
        ntws.save_weights({"not_style": np.zeros((2, 2))}, path)
        with pytest.raises(ContractError):
            load_style(path)


class TestConfigFile:
    def test_parse_and_build(self, tmp_path):
        path = tmp_path / "conf.cfg"
        path.write_text(
            "# comment line\n"
            "\n"
            "iterations = 7\n"
            "learning_rate = 2.5\n"
            "optimizer = adam\n"
            "distance = l1\n"
            "lambda = 0.5\n"
            "block_lengths = 1,2\n"
        )
        cfg = build_pipeline_config(parse_config_file(path))
        assert cfg.inversion.iterations == 7
        assert cfg.inversion.learning_rate == 2.5
        assert cfg.inversion.optimizer == "adam"
        assert cfg.distance.kind == "l1"
        assert cfg.search.lam == 0.5
        assert cfg.search.block_lengths == (1, 2)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "conf.cfg"
        path.write_text("irelevant = 1\n")
        with pytest.raises(ContractError, match="irelevant"):
            parse_config_file(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "conf.cfg"
        path.write_text("iterations 7\n")
        with pytest.raises(ContractError):
            parse_config_file(path)

    def test_custom_generator_shape(self):
        cfg = build_pipeline_config({"layers": "4", "width": "16",
                                     "output_resolution": "16",
                                     "channels": "16,8"})
        assert cfg.generator.layers == 4
        assert cfg.generator.channels == (16, 8)
        assert cfg.crop.output_resolution == 16


TINY_CFG = ("layers = 4\nwidth = 16\noutput_resolution = 16\n"
            "channels = 16,8\niterations = 3\n")


class TestCli:
    def tiny_config_path(self, tmp_path):
        path = tmp_path / "tiny.cfg"
        path.write_text(TINY_CFG)
        return str(path)

    def test_generate_invert_fuse_chain(self, tmp_path):
        cfg = self.tiny_config_path(tmp_path)
        img1 = str(tmp_path / "a.png")
        img2 = str(tmp_path / "b.png")
        st1 = str(tmp_path / "a.ntws")
        st2 = str(tmp_path / "b.ntws")
        assert main(["generate", "--config", cfg, "--seed", "1",
                     "--out", img1, "--out-style", st1]) == 0
        assert main(["generate", "--config", cfg, "--seed", "2",
                     "--out", img2, "--out-style", st2]) == 0

        trace = str(tmp_path / "trace.csv")
        inv_style = str(tmp_path / "inv.ntws")
        assert main(["invert", "--config", cfg, "--image", img1,
                     "--out-style", inv_style, "--trace", trace]) == 0
        with open(trace) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 3 + 1  # header + iterations + initial entry

        fused = str(tmp_path / "fused.ntws")
        assert main(["fuse", "--config", cfg, "--style1", st1, "--style2", st2,
                     "--mask", "1,2", "--out", fused]) == 0
        out = load_style(fused)
        np.testing.assert_array_equal(out.values[[1, 2]],
                                      load_style(st2).values[[1, 2]])
        np.testing.assert_array_equal(out.values[[0, 3]],
                                      load_style(st1).values[[0, 3]])

    def test_fuse_search_writes_scores(self, tmp_path):
        cfg = self.tiny_config_path(tmp_path)
        img1 = str(tmp_path / "a.png")
        img2 = str(tmp_path / "b.png")
        st1 = str(tmp_path / "a.ntws")
        st2 = str(tmp_path / "b.ntws")
        main(["generate", "--config", cfg, "--seed", "1", "--out", img1,
              "--out-style", st1])
        main(["generate", "--config", cfg, "--seed", "2", "--out", img2,
              "--out-style", st2])
        scores = str(tmp_path / "scores.csv")
        fused = str(tmp_path / "fused.ntws")
        assert main(["fuse", "--config", cfg, "--style1", st1, "--style2", st2,
                     "--search", "--image1", img1, "--image2", img2,
                     "--scores", scores, "--out", fused]) == 0
        with open(scores) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["block_length", "start", "d1", "d2", "objective"]

    def test_sweep_grid_files(self, tmp_path):
        cfg = self.tiny_config_path(tmp_path)
        st1 = str(tmp_path / "a.ntws")
        st2 = str(tmp_path / "b.ntws")
        main(["generate", "--config", cfg, "--seed", "1",
              "--out", str(tmp_path / "a.png"), "--out-style", st1])
        main(["generate", "--config", cfg, "--seed", "2",
              "--out", str(tmp_path / "b.png"), "--out-style", st2])
        out_dir = tmp_path / "grid"
        assert main(["sweep", "--config", cfg, "--style1", st1, "--style2", st2,
                     "--lengths", "1,2", "--starts", "0,-1",
                     "--out-dir", str(out_dir)]) == 0
        assert sorted(os.listdir(out_dir)) == [
            "sweep_i1_j-1.png", "sweep_i1_j0.png",
            "sweep_i2_j-1.png", "sweep_i2_j0.png"]

    def test_transfer_subcommand(self, fixture_pair, tmp_path):
        out = str(tmp_path / "out.png")
        assert main(["transfer",
                     "--identity", fixture_pair["identity"],
                     "--expression", fixture_pair["expression"],
                     "--identity-landmarks", fixture_pair["identity_landmarks"],
                     "--expression-landmarks", fixture_pair["expression_landmarks"],
                     "--iterations", "2", "--out", out]) == 0
        assert load_image(out).shape == (3, 160, 160)

    def test_metrics_subcommand(self, tmp_path, capsys):
        cfg = self.tiny_config_path(tmp_path)
        img1 = str(tmp_path / "a.png")
        img2 = str(tmp_path / "b.png")
        main(["generate", "--config", cfg, "--seed", "1", "--out", img1])
        main(["generate", "--config", cfg, "--seed", "2", "--out", img2])
        json_path = str(tmp_path / "report.json")
        assert main(["metrics", "--a", img1, "--b", img2,
                     "--json", json_path]) == 0
        assert "SSIM" in capsys.readouterr().out
        from stylefuse.metrics import MetricReport
        with open(json_path) as fh:
            report = MetricReport.from_json(fh.read())
        assert report.l1_sum > 0

    def test_missing_file_exits_one(self, tmp_path, capsys):
        code = main(["invert", "--image", str(tmp_path / "nope.png"),
                     "--out-style", str(tmp_path / "s.ntws")])
        assert code == 1
        assert "error in stage" in capsys.readouterr().err

    def test_search_without_images_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--style1", "a", "--style2", "b", "--search",
                  "--out", "c"])
        assert exc.value.code == 2

    def test_mask_and_search_mutually_exclusive(self):
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--style1", "a", "--style2", "b", "--mask", "1",
                  "--search", "--out", "c"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

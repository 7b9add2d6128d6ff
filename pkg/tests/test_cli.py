"""CLI surface tests: subcommands, flags, exit codes, artifact emission."""

import json

import pytest

from drlqr.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_PARTIAL, main


def write_cfg(tmp_path, name="cfg.json", **overrides):
    raw = {
        "seed": 7,
        "trials": 2,
        "domain": {"l_min": 0.45, "l_max": 0.55, "dt": 0.02},
        "optimizer": {"eta": 5e-8, "steps": 6, "eval_every": 3, "n_eval": 4},
        "methods": [
            {"method": "dr_sgd", "minibatch": 1, "label": "dr_sgd_m1"},
            {"method": "sa_fixed", "minibatch": 2, "label": "sa_fixed_m2"},
        ],
        "init": {"kind": "dare_nominal"},
        "theory": {"ensemble_size": 5, "diam_grid": 2},
    }
    raw.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


class TestCompare:
    def test_success_exit_zero(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        out = tmp_path / "out"
        code = main(["compare", "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert code == EXIT_OK
        assert (out / "raw.csv").exists()
        assert "raw rows" in capsys.readouterr().out

    def test_partial_failure_exit_four(self, tmp_path):
        cfg = write_cfg(tmp_path, init={"kind": "explicit", "K": [[500.0, 0.0, 0.0, 0.0]]})
        out = tmp_path / "out"
        code = main(["compare", "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert code == EXIT_PARTIAL
        assert (out / "errors.csv").exists()

    def test_json_format_adds_raw_json(self, tmp_path):
        cfg = write_cfg(tmp_path)
        out = tmp_path / "out"
        code = main(["compare", "--config", str(cfg), "--out", str(out),
                     "--threads", "1", "--format", "json"])
        assert code == EXIT_OK
        rows = json.loads((out / "raw.json").read_text())
        assert len(rows) == 8
        first = rows[0]
        assert isinstance(first["trial"], int)
        assert isinstance(first["cost_estimate"], float)
        assert first["method"] == "dr_sgd_m1"

    def test_seed_override_lands_in_echo(self, tmp_path):
        cfg = write_cfg(tmp_path)
        out = tmp_path / "out"
        main(["compare", "--config", str(cfg), "--out", str(out), "--threads", "1",
              "--seed", "11"])
        echo = json.loads((out / "config_echo.json").read_text())
        assert echo["seed"] == 11
        assert echo["anneal"]["seed"] == 11


class TestSynth:
    def test_single_trial_single_method(self, tmp_path):
        cfg = write_cfg(tmp_path, optimizer={
            "eta": 5e-8, "steps": 6, "eval_every": 3, "n_eval": 4, "minibatch": 4,
        })
        out = tmp_path / "out"
        code = main(["synth", "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert code == EXIT_OK
        lines = (out / "raw.csv").read_text().splitlines()
        body = [l.split(",") for l in lines[1:]]
        assert {r[0] for r in body} == {"dr_sgd_m4"}
        assert {r[1] for r in body} == {"0"}


class TestSample:
    def test_stdout_payload(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        code = main(["sample", "--config", str(cfg), "--n", "3"])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["count"] == 3
        for draw in payload["draws"]:
            assert len(draw["A"]) == 4 and len(draw["A"][0]) == 4
            assert len(draw["B"]) == 4 and len(draw["B"][0]) == 1

    def test_deterministic_in_seed(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        main(["sample", "--config", str(cfg), "--n", "2"])
        first = capsys.readouterr().out
        main(["sample", "--config", str(cfg), "--n", "2"])
        second = capsys.readouterr().out
        assert first == second
        main(["sample", "--config", str(cfg), "--n", "2", "--seed", "8"])
        assert capsys.readouterr().out != first

    def test_out_dir_writes_json(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        out = tmp_path / "dump"
        code = main(["sample", "--config", str(cfg), "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads((out / "sample.json").read_text())
        assert payload["count"] == 10


class TestAnneal:
    def test_success_payload(self, tmp_path):
        # weak gravity keeps the zero gain nearly feasible, so the schedule is short
        cfg = write_cfg(
            tmp_path,
            domain={"l_min": 0.45, "l_max": 0.55, "dt": 0.02, "params": {"g": 1.0}},
            anneal={"ensemble_size": 8, "inner_budget": 80, "n_validate": 50, "seed": 0},
        )
        out = tmp_path / "out"
        code = main(["anneal", "--config", str(cfg), "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads((out / "anneal.json").read_text())
        gammas = payload["gamma_history"]
        assert gammas == sorted(gammas) and len(set(gammas)) == len(gammas)
        assert gammas[-1] == 1.0
        assert payload["stages"] == len(gammas) == len(payload["stage_costs"])
        assert len(payload["K"]) == 1 and len(payload["K"][0]) == 4
        # stage_costs are start-of-stage estimates; the last inner descent improves on them
        assert payload["final_cost"] <= payload["stage_costs"][-1]

    def test_stage_cap_is_numerical_failure(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            anneal={"max_stages": 1, "ensemble_size": 8, "n_validate": 10},
        )
        code = main(["anneal", "--config", str(cfg)])
        assert code == EXIT_NUMERICAL
        assert "error" in capsys.readouterr().err


class TestConstants:
    def test_emits_constant_set(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        code = main(["constants", "--config", str(cfg)])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        for key in ("L_K", "c_g", "L_cost", "r_g", "G_bar", "sigma_sq",
                    "eps_grad", "M", "N", "mu", "het_budget"):
            assert key in payload, key
        assert payload["M"] >= 1 and payload["N"] >= 1
        assert payload["mu"] == 0.125

    def test_infeasible_init_is_numerical_failure(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, init={"kind": "explicit", "K": [[500.0, 0.0, 0.0, 0.0]]})
        code = main(["constants", "--config", str(cfg)])
        assert code == EXIT_NUMERICAL
        assert "error" in capsys.readouterr().err


class TestConfigErrors:
    def test_missing_file(self, tmp_path, capsys):
        code = main(["compare", "--config", str(tmp_path / "nope.json")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"trails": 3}))
        assert main(["compare", "--config", str(path)]) == EXIT_CONFIG

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["sample", "--config", str(path)]) == EXIT_CONFIG

    def test_unknown_subcommand_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate", "--config", "x.json"])
        assert info.value.code == 2

"""Config parsing, validation and round-trip stability."""

import json

import numpy as np
import pytest

from drlqr.config import (
    InitSpec,
    MethodSpec,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from drlqr.errors import ConfigError


def minimal_raw():
    return {
        "seed": 3,
        "trials": 2,
        "domain": {"kind": "cartpole", "l_min": 0.2, "l_max": 0.8, "dt": 0.02},
        "optimizer": {"eta": 5e-8, "steps": 10},
    }


class TestParsing:
    def test_empty_config_gets_defaults(self):
        cfg = config_from_dict({})
        assert cfg.trials == 100
        assert cfg.domain.l_min == 0.2
        assert cfg.cost.Q.shape == (4, 4)
        assert cfg.percentiles == (25.0, 50.0, 75.0)
        assert len(cfg.methods) == 1

    def test_methods_default_from_optimizer(self):
        cfg = config_from_dict({"optimizer": {"eta": 1e-3, "steps": 5, "minibatch": 4}})
        assert cfg.methods[0].label == "dr_sgd_m4"
        assert cfg.methods[0].minibatch == 4

    def test_matrix_keywords(self):
        cfg = config_from_dict({"cost": {"Q": "identity", "S": "zero", "R": 2.0}})
        np.testing.assert_array_equal(cfg.cost.Q, np.eye(4))
        np.testing.assert_array_equal(cfg.cost.R, [[2.0]])
        np.testing.assert_array_equal(cfg.cost.S, np.zeros((4, 1)))

    def test_explicit_matrix_shape_checked(self):
        with pytest.raises(ConfigError, match="cost.Q"):
            config_from_dict({"cost": {"Q": [[1.0, 0.0], [0.0, 1.0]]}})

    def test_unknown_matrix_keyword(self):
        with pytest.raises(ConfigError, match="unknown matrix keyword"):
            config_from_dict({"cost": {"Q": "ones"}})

    def test_domain_params_override(self):
        raw = minimal_raw()
        raw["domain"]["params"] = {"m_p": 1.0}
        cfg = config_from_dict(raw)
        assert cfg.domain.base.m_p == 1.0
        assert cfg.domain.base.m_c == 1.0  # untouched default

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ConfigError, match="config"):
            config_from_dict({"trails": 5})
        with pytest.raises(ConfigError, match="domain"):
            config_from_dict({"domain": {"length_min": 0.1}})
        with pytest.raises(ConfigError, match="optimizer"):
            config_from_dict({"optimizer": {"eta": 1e-3, "steps": 5, "lr": 0.1}})
        with pytest.raises(ConfigError, match="domain.params"):
            config_from_dict({"domain": {"params": {"mass": 2.0}}})

    def test_bad_domain_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            config_from_dict({"domain": {"kind": "quadrotor"}})

    def test_invalid_values_become_config_errors(self):
        with pytest.raises(ConfigError):
            config_from_dict({"optimizer": {"eta": -1.0, "steps": 5}})
        with pytest.raises(ConfigError):
            config_from_dict({"trials": 0})
        with pytest.raises(ConfigError):
            config_from_dict({"percentiles": [150.0]})
        with pytest.raises(ConfigError):
            config_from_dict({"cost": {"Q": 0.5}})  # fails Qblk >= I

    def test_duplicate_method_labels_rejected(self):
        raw = minimal_raw()
        raw["methods"] = [
            {"method": "dr_sgd", "minibatch": 1, "label": "x"},
            {"method": "dr_sgd", "minibatch": 2, "label": "x"},
        ]
        with pytest.raises(ConfigError, match="unique"):
            config_from_dict(raw)


class TestMethodAndInitSpecs:
    def test_method_validation(self):
        with pytest.raises(ConfigError):
            MethodSpec(method="adam", minibatch=1, label="a")
        with pytest.raises(ConfigError):
            MethodSpec(method="dr_sgd", minibatch=0, label="a")
        with pytest.raises(ConfigError):
            MethodSpec(method="dr_sgd", minibatch=1, label="")

    def test_init_validation(self):
        with pytest.raises(ConfigError):
            InitSpec(kind="random")
        with pytest.raises(ConfigError):
            InitSpec(kind="dare_discounted", gamma=0.0)
        with pytest.raises(ConfigError):
            InitSpec(kind="explicit")  # K missing
        spec = InitSpec(kind="explicit", K=((0.0, 0.0, 0.0, 0.0),))
        assert spec.K is not None

    def test_explicit_k_parsed_to_tuples(self):
        cfg = config_from_dict({"init": {"kind": "explicit", "K": [[1, 2, 3, 4]]}})
        assert cfg.init.K == ((1.0, 2.0, 3.0, 4.0),)


class TestRoundTrip:
    def test_dict_round_trip_is_identity(self):
        raw = minimal_raw()
        raw["optimizer"]["eval_seed"] = [3, 0]
        raw["init"] = {"kind": "anneal"}
        cfg = config_from_dict(raw)
        echoed = config_to_dict(cfg)
        cfg2 = config_from_dict(echoed)
        assert config_to_dict(cfg2) == echoed

    def test_echo_materializes_all_defaults(self):
        echoed = config_to_dict(config_from_dict({}))
        assert echoed["optimizer"]["eval_seed"] is None
        assert echoed["domain"]["params"]["m_p"] == 0.1
        assert echoed["anneal"]["gamma_tol"] == 1e-4
        assert echoed["theory"]["variant"] == "main"
        assert json.dumps(echoed)  # JSON-serializable

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        cfg = config_from_dict(minimal_raw())
        save_config(cfg, path)
        cfg2 = load_config(path)
        assert config_to_dict(cfg) == config_to_dict(cfg2)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(bad)
        nonobject = tmp_path / "arr.json"
        nonobject.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="root"):
            load_config(nonobject)

    def test_shipped_desk_config_loads(self):
        cfg = load_config("configs/desk_scale.json")
        assert cfg.seed == 3
        assert cfg.trials == 100
        assert cfg.domain.base.m_p == 1.0
        assert cfg.init.kind == "anneal"
        labels = [m.label for m in cfg.methods]
        assert labels == ["dr_sgd_m1", "dr_sgd_m4", "dr_sgd_m8", "sa_fixed_m8"]

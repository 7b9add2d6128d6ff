"""Schema validation and parsing for the pinned CSV inputs."""

import pytest

from drlqr_plot.io import InputError, load_inputs, read_final_k, read_summary

from conftest import write_inputs


class TestReadSummary:
    def test_parses_methods_in_first_appearance_order(self, input_dir):
        summary = read_summary(input_dir)
        assert list(summary) == ["dr_sgd_m8", "sa_fixed_m8"]
        s = summary["dr_sgd_m8"]
        assert s.steps == [100, 200]
        assert s.p25 == [9.5, 8.5]
        assert s.p50 == [10.0, 9.0]
        assert s.p75 == [10.5, 9.5]

    def test_rows_sorted_by_step(self, tmp_path):
        shuffled = (
            "method,step,p25,p50,p75\n"
            "m,200,1.0,2.0,3.0\n"
            "m,100,4.0,5.0,6.0\n"
        )
        d = write_inputs(tmp_path / "o", summary=shuffled)
        s = read_summary(d)["m"]
        assert s.steps == [100, 200]
        assert s.p50 == [5.0, 2.0]

    def test_missing_file_names_it(self, tmp_path):
        d = write_inputs(tmp_path / "o", summary=None)
        with pytest.raises(InputError, match="summary.csv"):
            read_summary(d)

    def test_custom_percentile_header_rejected(self, tmp_path):
        bad = "method,step,p10,p50,p90\nm,1,1.0,2.0,3.0\n"
        d = write_inputs(tmp_path / "o", summary=bad)
        with pytest.raises(InputError, match="expected header"):
            read_summary(d)

    def test_non_numeric_cell_rejected(self, tmp_path):
        bad = "method,step,p25,p50,p75\nm,1,low,2.0,3.0\n"
        d = write_inputs(tmp_path / "o", summary=bad)
        with pytest.raises(InputError, match="bad p25"):
            read_summary(d)

    def test_short_row_rejected(self, tmp_path):
        bad = "method,step,p25,p50,p75\nm,1,1.0\n"
        d = write_inputs(tmp_path / "o", summary=bad)
        with pytest.raises(InputError, match="fields"):
            read_summary(d)


class TestReadFinalK:
    def test_groups_by_method(self, input_dir):
        final_k = read_final_k(input_dir)
        assert final_k == {
            "dr_sgd_m8": [2.5, 2.625],
            "sa_fixed_m8": [2.75, 3.5],
        }

    def test_missing_file_names_it(self, tmp_path):
        d = write_inputs(tmp_path / "o", final_k=None)
        with pytest.raises(InputError, match="final_k.csv"):
            read_final_k(d)


class TestLoadInputs:
    def test_all_three_schemas_required(self, tmp_path):
        d = write_inputs(tmp_path / "o", raw=None)
        with pytest.raises(InputError, match="raw.csv"):
            load_inputs(d)

    def test_raw_header_validated_without_reading_rows(self, tmp_path):
        bad_raw = "method,step\nm,1\n"
        d = write_inputs(tmp_path / "o", raw=bad_raw)
        with pytest.raises(InputError, match="raw.csv"):
            load_inputs(d)

    def test_happy_path(self, input_dir):
        inputs = load_inputs(input_dir)
        assert set(inputs.summary) == set(inputs.final_k)

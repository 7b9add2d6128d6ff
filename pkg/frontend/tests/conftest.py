import pytest

SUMMARY = """method,step,p25,p50,p75
dr_sgd_m8,100,9.5,10.0,10.5
dr_sgd_m8,200,8.5,9.0,9.5
sa_fixed_m8,100,10.5,11.0,11.5
sa_fixed_m8,200,9.75,10.25,10.75
"""

FINAL_K = """method,trial,k_norm
dr_sgd_m8,0,2.5
dr_sgd_m8,1,2.625
sa_fixed_m8,0,2.75
sa_fixed_m8,1,3.5
"""

RAW = """method,trial,step,cost_estimate,grad_norm,k_norm,infeasible_events
dr_sgd_m8,0,100,10.0,0.5,2.5,0
"""


def write_inputs(path, summary=SUMMARY, final_k=FINAL_K, raw=RAW):
    path.mkdir(parents=True, exist_ok=True)
    if summary is not None:
        (path / "summary.csv").write_text(summary)
    if final_k is not None:
        (path / "final_k.csv").write_text(final_k)
    if raw is not None:
        (path / "raw.csv").write_text(raw)
    return path


@pytest.fixture
def input_dir(tmp_path):
    return write_inputs(tmp_path / "out")

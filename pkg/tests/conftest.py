import pytest

from syncforensics.syncnet import bundled_scenario, export_simulation, run_scenario


@pytest.fixture(scope="session")
def poc_sim():
    return run_scenario(bundled_scenario())


@pytest.fixture(scope="session")
def poc_tree(tmp_path_factory, poc_sim):
    out = tmp_path_factory.mktemp("poc") / "sim"
    export_simulation(poc_sim, out)
    return out

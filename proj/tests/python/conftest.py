import os
import pathlib

import pytest

SOURCE_DIR = pathlib.Path(os.environ.get("ICSBED_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def source_dir():
    return SOURCE_DIR


@pytest.fixture(scope="session")
def mitm_run(tmp_path_factory):
    import icsbed

    out = tmp_path_factory.mktemp("mitm")
    cfg = icsbed.load_config(str(SOURCE_DIR / "configs" / "mitm.json"))
    summary = icsbed.Simulation(cfg, str(out)).run()
    return out, summary

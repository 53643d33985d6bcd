import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from ncts.model import model_from_dict  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def preset(name):
    return json.loads(resources.files("ncts").joinpath("data", f"{name}.json").read_text())


@pytest.fixture(scope="session")
def case_docs():
    return {c: preset(c) for c in ("case1", "case2", "case3")}


@pytest.fixture(scope="session")
def case1_model(case_docs):
    return model_from_dict(case_docs["case1"]["model"])


@pytest.fixture(scope="session")
def certificates(case_docs):
    """One synthesis per preset, shared by the slower tests."""
    from ncts.lmi import SynthesisScalars
    from ncts.synthesis import synthesize

    out = {}
    for name, doc in case_docs.items():
        m = model_from_dict(doc["model"])
        out[name] = synthesize(m, SynthesisScalars(**doc["scalars"]), fault_mode=doc["fault_mode"])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])

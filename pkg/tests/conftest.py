import json

import pytest

from specagent.demo import (
    MACHINES_PATH,
    PROVIDER_SCRIPT_PATH,
    SCENARIOS_PATH,
    SPEC_DIR,
    demo_handlers,
    load_demo_bundle,
    load_machines,
    read_spec_dir,
)
from specagent.evalsim import load_scenarios
from specagent.providers import load_script
from specagent.registry import registry_from_bundle
from specagent.runtime import AgentRuntime


@pytest.fixture(scope="session")
def demo_documents():
    return read_spec_dir(SPEC_DIR)


@pytest.fixture(scope="session")
def bundle():
    bundle, diags = load_demo_bundle()
    assert bundle is not None, [str(d) for d in diags]
    return bundle


@pytest.fixture(scope="session")
def machines():
    return load_machines(MACHINES_PATH)


@pytest.fixture()
def registry(bundle, machines):
    return registry_from_bundle(bundle, demo_handlers(machines), version="demo")


@pytest.fixture(scope="session")
def provider():
    return load_script(str(PROVIDER_SCRIPT_PATH))


@pytest.fixture(scope="session")
def scenario_suite():
    return load_scenarios(str(SCENARIOS_PATH))


@pytest.fixture()
def runtime(bundle, registry, provider):
    return AgentRuntime(bundle, registry, provider)


@pytest.fixture(scope="session")
def scenario_payload():
    with open(SCENARIOS_PATH, encoding="utf-8") as fh:
        return json.load(fh)

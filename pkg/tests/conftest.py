import pytest

from divr.gateway import EndpointConfig, LlmGateway, MockTransport

FIXTURE_DIR = "tests/data"


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[{outcome}] {name}")


@pytest.fixture
def make_gateway(tmp_path):
    """Factory for gateways backed by a scripted mock transport."""

    counter = {"n": 0}

    def factory(
        completions=(),
        transport=None,
        max_retries=2,
        concurrency_limit=4,
        **transport_kwargs,
    ):
        counter["n"] += 1
        if transport is None:
            transport = MockTransport(completions=completions, **transport_kwargs)
        config = EndpointConfig(
            model_id="mock-model",
            max_retries=max_retries,
            concurrency_limit=concurrency_limit,
        )
        gateway = LlmGateway(
            config,
            transport=transport,
            cache_dir=tmp_path / f"cache-{counter['n']}",
            retry_backoff=0.0,
        )
        return gateway, transport

    return factory

import threading

import pytest

from divr.errors import (
    BudgetExceededError,
    InvalidParameterError,
    ProtocolError,
    TransportError,
)
from divr.gateway import (
    LESS_THINK_SENTENCE,
    DecodeStrategy,
    EndpointConfig,
    MockTransport,
    cosine,
)

ANSWER_PROMPT = "What is it?\nAllowed answers: A, B"


def test_endpoint_config_validation():
    with pytest.raises(InvalidParameterError):
        EndpointConfig(model_id="m", timeout=0)
    with pytest.raises(InvalidParameterError):
        EndpointConfig(model_id="m", max_retries=-1)
    with pytest.raises(InvalidParameterError):
        EndpointConfig(model_id="m", concurrency_limit=0)


def test_endpoint_config_from_env(monkeypatch):
    monkeypatch.setenv("DIVR_BASE_URL", "http://example.test/v1")
    monkeypatch.setenv("DIVR_API_KEY", "secret")
    config = EndpointConfig.from_env("model-x")
    assert config.base_url == "http://example.test/v1"
    assert config.api_key == "secret"


def test_decode_strategy_validation():
    with pytest.raises(InvalidParameterError):
        DecodeStrategy(mode="regular_think", wait_count=2)
    with pytest.raises(InvalidParameterError):
        DecodeStrategy(mode="jazz_think")
    strategy = DecodeStrategy.more_think()
    assert strategy.wait_count == 3
    assert (strategy.temperature, strategy.top_p, strategy.max_new_tokens) == (0.7, 0.95, 4096)


# ----------------------------------------------------------------------
# single-request modes


def test_zero_think_prefix_and_empty_think(make_gateway):
    gateway, mock = make_gateway(completions=["The final answer is **A**."])
    result = gateway.complete(ANSWER_PROMPT, DecodeStrategy(mode="zero_think"))
    assert result.think_text == ""
    assert result.answer_text == "The final answer is **A**."
    _, payload = mock.requests[-1]
    assert payload["messages"][-1]["content"] == "<think></think>"


def test_less_think_prefix_sentence(make_gateway):
    gateway, mock = make_gateway(completions=["Sure."])
    result = gateway.complete(ANSWER_PROMPT, DecodeStrategy(mode="less_think"))
    assert result.think_text == LESS_THINK_SENTENCE
    assert result.answer_text == "Sure."
    _, payload = mock.requests[-1]
    assert payload["messages"][-1]["content"] == f"<think>{LESS_THINK_SENTENCE}</think>"


def test_regular_think_split(make_gateway):
    gateway, mock = make_gateway(completions=["step one</think>final text"])
    result = gateway.complete(ANSWER_PROMPT)
    assert result.think_text == "step one"
    assert result.answer_text == "final text"
    assert result.injected_continuations == 0
    _, payload = mock.requests[-1]
    assert payload["messages"][-1]["content"] == "<think>"


def test_regular_think_without_delimiter_is_all_think(make_gateway):
    gateway, _ = make_gateway(completions=["kept thinking forever"])
    result = gateway.complete(ANSWER_PROMPT)
    assert result.think_text == "kept thinking forever"
    assert result.answer_text == ""


def test_sampling_params_forwarded(make_gateway):
    gateway, mock = make_gateway(completions=["x</think>y"])
    gateway.complete(ANSWER_PROMPT, DecodeStrategy(temperature=0.3, top_p=0.5, max_new_tokens=64))
    _, payload = mock.requests[-1]
    assert payload["temperature"] == 0.3
    assert payload["top_p"] == 0.5
    assert payload["max_tokens"] == 64


def test_empty_prompt_rejected(make_gateway):
    gateway, _ = make_gateway()
    with pytest.raises(InvalidParameterError):
        gateway.complete("")


# ----------------------------------------------------------------------
# caching


def test_cache_hit_on_identical_call(make_gateway):
    gateway, mock = make_gateway(completions=["only once</think>answer"])
    first = gateway.complete(ANSWER_PROMPT)
    second = gateway.complete(ANSWER_PROMPT)
    assert first.cache_hit is False
    assert second.cache_hit is True
    assert second.text == first.text
    assert mock.calls == 1  # script would be exhausted otherwise


def test_cache_replays_with_network_disabled(tmp_path):
    from divr.gateway import LlmGateway

    cache_dir = tmp_path / "shared-cache"
    config = EndpointConfig(model_id="mock-model")
    online = LlmGateway(
        config,
        transport=MockTransport(completions=["cached</think>body"]),
        cache_dir=cache_dir,
        retry_backoff=0.0,
    )
    first = online.complete(ANSWER_PROMPT)

    dead_transport = MockTransport()  # raises on any request
    offline = LlmGateway(config, transport=dead_transport, cache_dir=cache_dir, retry_backoff=0.0)
    replay = offline.complete(ANSWER_PROMPT)
    assert replay.cache_hit is True
    assert replay.text == first.text
    assert dead_transport.calls == 0


def test_cache_salt_separates_requests(make_gateway):
    gateway, mock = make_gateway(completions=["a</think>1", "b</think>2"])
    r0 = gateway.complete(ANSWER_PROMPT, cache_salt="s0")
    r1 = gateway.complete(ANSWER_PROMPT, cache_salt="s1")
    assert (r0.answer_text, r1.answer_text) == ("1", "2")
    assert mock.calls == 2


# ----------------------------------------------------------------------
# retries and protocol errors


def test_retries_then_success(make_gateway):
    gateway, mock = make_gateway(completions=["ok</think>done"], fail_first=2, max_retries=2)
    result = gateway.complete(ANSWER_PROMPT)
    assert result.answer_text == "done"
    assert mock.calls == 3


def test_retry_exhaustion_raises_transport_error(make_gateway):
    gateway, mock = make_gateway(fail_first=3, max_retries=2)
    with pytest.raises(TransportError):
        gateway.complete(ANSWER_PROMPT)
    assert mock.calls == 3


def test_malformed_response_body_raises_protocol_error(make_gateway):
    gateway, _ = make_gateway(completions=[{"unexpected": True}])
    with pytest.raises(ProtocolError):
        gateway.complete(ANSWER_PROMPT)


# ----------------------------------------------------------------------
# budget forcing


def test_budget_forcing_three_waits(make_gateway):
    script = [
        "first thought</think>discarded",
        "second thought</think>",
        "third thought</think>tail",
        "final thought</think>The answer is **B**.",
    ]
    gateway, mock = make_gateway(completions=script)
    strategy = DecodeStrategy.more_think(wait_count=3)
    result = gateway.budget_forced_complete(
        ANSWER_PROMPT, ["educator", "parent", "nurse"], strategy
    )
    assert result.injected_continuations == 3
    assert result.text.count("</think>") == 1
    assert result.answer_text == "The answer is **B**."
    for role in ("educator", "parent", "nurse"):
        assert f"Wait, I need to think from {role}'s perspective" in result.think_text
    assert len(result.raw_segments) == 4
    assert mock.calls == 4


def test_budget_forcing_orders_roles(make_gateway):
    script = ["a</think>", "b</think>", "c</think>done"]
    gateway, _ = make_gateway(completions=script)
    strategy = DecodeStrategy.more_think(wait_count=2)
    result = gateway.budget_forced_complete(ANSWER_PROMPT, ["educator", "parent"], strategy)
    educator = result.think_text.index("educator")
    parent = result.think_text.index("parent")
    assert educator < parent


def test_budget_forcing_bare_continuations(make_gateway):
    script = ["a</think>", "b</think>done"]
    gateway, _ = make_gateway(completions=script)
    result = gateway.budget_forced_complete(
        ANSWER_PROMPT, [], DecodeStrategy.more_think(wait_count=1)
    )
    assert result.injected_continuations == 1
    assert "Wait," in result.think_text


def test_budget_forcing_zero_waits_equals_regular(make_gateway):
    script = ["same thought</think>same answer"]
    regular_gateway, _ = make_gateway(completions=list(script))
    forced_gateway, _ = make_gateway(completions=list(script))
    regular = regular_gateway.complete(ANSWER_PROMPT)
    forced = forced_gateway.budget_forced_complete(
        ANSWER_PROMPT, [], DecodeStrategy.more_think(wait_count=0)
    )
    assert forced.think_text == regular.think_text
    assert forced.answer_text == regular.answer_text
    assert forced.raw_segments == regular.raw_segments
    assert forced.injected_continuations == regular.injected_continuations == 0


def test_budget_exceeded_when_delimiter_never_appears(make_gateway):
    gateway, _ = make_gateway(completions=["rambling without end"])
    with pytest.raises(BudgetExceededError):
        gateway.budget_forced_complete(
            ANSWER_PROMPT, [], DecodeStrategy.more_think(wait_count=1)
        )


def test_budget_forcing_needs_enough_roles(make_gateway):
    gateway, _ = make_gateway()
    with pytest.raises(InvalidParameterError):
        gateway.budget_forced_complete(
            ANSWER_PROMPT, ["only-one"], DecodeStrategy.more_think(wait_count=3)
        )


def test_budget_forcing_requires_more_think(make_gateway):
    gateway, _ = make_gateway()
    with pytest.raises(InvalidParameterError):
        gateway.budget_forced_complete(ANSWER_PROMPT, [], DecodeStrategy())


def test_complete_routes_more_think(make_gateway):
    script = ["a</think>", "b</think>fin"]
    gateway, _ = make_gateway(completions=script)
    result = gateway.complete(
        ANSWER_PROMPT, DecodeStrategy.more_think(wait_count=1), role_sequence=["critic"]
    )
    assert result.injected_continuations == 1
    assert "critic" in result.think_text


# ----------------------------------------------------------------------
# embeddings


def test_embeddings_are_cached_and_deterministic(make_gateway):
    gateway, mock = make_gateway()
    first = gateway.embed(["alpha", "beta"])
    again = gateway.embed(["alpha", "beta"])
    assert first == again
    assert mock.calls == 1  # second round served from cache


def test_embedding_self_similarity(make_gateway):
    gateway, _ = make_gateway()
    (vec,) = gateway.embed(["alpha"])
    assert cosine(vec, vec) == pytest.approx(1.0, abs=1e-12)


def test_basis_embeddings_are_orthogonal(make_gateway):
    gateway, _ = make_gateway()
    u, v = gateway.embed(["north", "south"])
    assert cosine(u, v) == 0.0


def test_identical_texts_identical_vectors(make_gateway):
    gateway, _ = make_gateway()
    u, v = gateway.embed(["same text", "same text"])
    assert u == v


def test_embed_requires_texts(make_gateway):
    gateway, _ = make_gateway()
    with pytest.raises(InvalidParameterError):
        gateway.embed([])


def test_cosine_zero_vector_guard():
    assert cosine([0.0, 0.0], [1.0, 0.0]) == 0.0


# ----------------------------------------------------------------------
# concurrency


def test_concurrency_limit_enforced(make_gateway):
    script = [f"t{i}</think>a{i}" for i in range(12)]
    gateway, mock = make_gateway(
        completions=script, concurrency_limit=2, latency=0.02
    )

    def worker(i):
        gateway.complete(ANSWER_PROMPT, cache_salt=f"w{i}")

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert mock.calls == 12
    assert mock.max_in_flight <= 2

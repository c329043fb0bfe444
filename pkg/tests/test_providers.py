"""Provider layer checks: mocks, pricing, retry, HTTP client, transcripts."""

import re
from decimal import Decimal

import numpy as np
import pytest

from constsum.providers import (
    BudgetExceededError,
    ChatRequest,
    ChatResponse,
    ContextLengthError,
    CostLedger,
    HashEmbedder,
    HttpChatProvider,
    MaskedSequence,
    MockMaskedLM,
    ProviderError,
    RateLimitError,
    ScriptMissError,
    ScriptedChatProvider,
    SyntheticChatProvider,
    TranscriptMismatchError,
    TranscriptRecorder,
    TranscriptReplayer,
    TransportError,
    with_retries,
)


def make_request(content="hello", model="gpt-3.5-turbo", system="summarization expert"):
    return ChatRequest(model=model, system_role=system, user_content=content)


def test_chat_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", "s", "u", temperature=2.5)
    with pytest.raises(ValueError):
        ChatRequest("m", "s", "u", max_output_tokens=0)
    with pytest.raises(ValueError):
        ChatResponse("t", prompt_tokens=-1, completion_tokens=0)


def test_masked_sequence_validation():
    MaskedSequence(("a", "b"), (0, 1))
    with pytest.raises(ValueError):
        MaskedSequence((), ())
    with pytest.raises(ValueError):
        MaskedSequence(("a", "b"), (1, 0))
    with pytest.raises(ValueError):
        MaskedSequence(("a", "b"), (2,))


def test_ledger_16k_pricing():
    ledger = CostLedger()
    entry = ledger.add("gpt-3.5-turbo-16k", 1000, 1000)
    assert entry.cost == Decimal("0.0070")


def test_ledger_4k_pricing():
    ledger = CostLedger()
    entry = ledger.add("gpt-3.5-turbo", 1000, 1000)
    assert entry.cost == Decimal("0.0035")


def test_ledger_total_is_sum():
    ledger = CostLedger()
    for _ in range(7):
        ledger.add("gpt-3.5-turbo", 123, 456)
    assert ledger.total == sum(e.cost for e in ledger.entries)
    # each entry: 123/1000*0.0015 + 456/1000*0.002 = 0.0010965 -> 0.0011
    assert ledger.total == Decimal("0.0011") * 7
    assert ledger.as_dict()["total"] == str(ledger.total)


def test_ledger_unknown_model():
    with pytest.raises(KeyError):
        CostLedger().add("gpt-9", 1, 1)


def test_retry_backoff_delays():
    delays = []
    calls = {"n": 0}

    def flaky():
        calls["n"] += 1
        if calls["n"] < 3:
            raise TransportError("down")
        return "ok"

    assert with_retries(flaky, attempts=3, base_delay=1.0, sleep=delays.append) == "ok"
    assert delays == [1.0, 2.0]


def test_retry_exhausts_and_raises():
    delays = []

    def always_rate_limited():
        raise RateLimitError("slow down")

    with pytest.raises(RateLimitError):
        with_retries(always_rate_limited, attempts=3, base_delay=0.5, sleep=delays.append)
    assert delays == [0.5, 1.0]


def test_retry_does_not_catch_context_overflow():
    calls = {"n": 0}

    def overflow():
        calls["n"] += 1
        raise ContextLengthError("too long")

    with pytest.raises(ContextLengthError):
        with_retries(overflow, attempts=3, sleep=lambda _: None)
    assert calls["n"] == 1


def test_scripted_provider_hit_and_miss():
    request = make_request("describe M1")
    provider = ScriptedChatProvider([
        {
            "name": "probe_M1",
            "model": request.model,
            "system_role": request.system_role,
            "user_content": request.user_content,
            "temperature": 0.0,
            "response": "1. Right to life: description",
        }
    ])
    assert provider.chat(request).text == "1. Right to life: description"
    with pytest.raises(ScriptMissError, match="probe_M1"):
        provider.chat(make_request("something else"))
    assert [r.user_content for r in provider.requests] == ["describe M1", "something else"]


def test_scripted_provider_charges_ledger():
    ledger = CostLedger()
    request = make_request("x" * 4000)
    provider = ScriptedChatProvider([
        {
            "name": "big",
            "model": request.model,
            "system_role": request.system_role,
            "user_content": request.user_content,
            "response": "y" * 4000,
        }
    ], ledger=ledger)
    provider.chat(request)
    assert len(ledger.entries) == 1
    assert ledger.entries[0].prompt_tokens >= 1000
    assert ledger.total > Decimal("0")


def test_hash_embedder_contract():
    embedder = HashEmbedder()
    vecs = embedder.embed(["a", "a", "b", "the right to life"])
    assert len(vecs) == 4
    for v in vecs:
        assert abs(np.linalg.norm(v) - 1.0) < 1e-6
    assert float(np.dot(vecs[0], vecs[1])) == pytest.approx(1.0)
    assert -1.0 <= float(np.dot(vecs[0], vecs[2])) <= 1.0
    with pytest.raises(ValueError):
        embedder.embed([])


def test_hash_embedder_deterministic():
    a = HashEmbedder().embed(["life and liberty"])[0]
    b = HashEmbedder().embed(["life and liberty"])[0]
    np.testing.assert_array_equal(a, b)


def test_mock_masked_lm_most_frequent_rule():
    mlm = MockMaskedLM()
    seq = MaskedSequence(("law", "is", "law"), (1,))
    # context has X=law three times total with the sequence; "law" wins
    assert mlm.fill_mask(seq, "law law other words") == ["law"]


def test_mock_masked_lm_tie_breaks_first_seen():
    mlm = MockMaskedLM()
    seq = MaskedSequence(("z",), (0,))
    assert mlm.fill_mask(seq, "beta alpha beta alpha") == ["beta"]


def test_mock_masked_lm_zero_positions():
    mlm = MockMaskedLM()
    assert mlm.fill_mask(MaskedSequence(("a",), ()), "context") == []


def test_mock_masked_lm_budget():
    mlm = MockMaskedLM(token_limit=8)
    seq = MaskedSequence(tuple("abcdef"), (0,))
    with pytest.raises(BudgetExceededError, match="truncate"):
        mlm.fill_mask(seq, "one two three four")


FIXTURE_SENTENCES = [
    "The right to life shall be protected by law.",
    "No one shall be held in slavery or servitude!",
    "Is torture prohibited? Yes, absolutely.",
    "Article 12(3) applies, mutatis mutandis.",
    "Everyone has the right to liberty and security of person.",
    "Taxes shall be levied only pursuant to law.",
    "The dignity of man is inviolable.",
    "All citizens are equal before the law.",
    "Freedom of expression; freedom of assembly.",
    "Education is compulsory for ten years.",
    "Property entails obligations (social function).",
    "The death penalty is abolished.",
    "Military service is regulated by statute.",
    "Judges are independent and subject only to the law.",
    "Aliens enjoy asylum under certain conditions.",
    "Labour is protected in all its forms.",
    "Health care is a fundamental right.",
    "The home is inviolable, searches require warrants.",
    "Correspondence secrecy may be restricted by court order.",
    "Minorities enjoy cultural autonomy.",
]


def test_tokenize_keeps_alphanumeric_content():
    mlm = MockMaskedLM()
    for sentence in FIXTURE_SENTENCES:
        joined = "".join(mlm.tokenize(sentence))
        assert re.sub(r"\W", "", joined) == re.sub(r"\W", "", sentence)


def test_synthetic_stage1_shape():
    provider = SyntheticChatProvider()
    prompt = (
        "Given the text The constitution protects human dignity. Everyone has "
        "rights., detect keywords in the text and generate a compressed version "
        "of it based on the keywords.")
    text = provider.chat(make_request(prompt)).text
    assert text.startswith("Keywords: ")
    assert "\nCompressed Text: " in text
    kw_line, body = text.split("\nCompressed Text: ", 1)
    for kw in kw_line[len("Keywords: "):].split(", "):
        assert kw.lower() in body.lower()


def test_synthetic_probe_is_numbered_list():
    provider = SyntheticChatProvider()
    prompt = (
        "Describe the topic Citizen Duties based on what is written in the "
        "constitutions of European countries.")
    text = provider.chat(make_request(prompt)).text
    lines = text.split("\n")
    assert len(lines) >= 8
    for i, line in enumerate(lines, 1):
        assert line.startswith(f"{i}. ")
        assert ": " in line


def test_synthetic_deterministic():
    p1 = SyntheticChatProvider()
    p2 = SyntheticChatProvider()
    prompt = "Describe the topic Social Rights based on what is written in x."
    assert p1.chat(make_request(prompt)).text == p2.chat(make_request(prompt)).text


def test_synthetic_rejects_unknown_prompt():
    with pytest.raises(ScriptMissError):
        SyntheticChatProvider().chat(make_request("What is the weather?"))


def fake_transport(script):
    """script: list of (status, payload); pops one per call."""
    calls = []

    def send(body):
        calls.append(body)
        status, payload = script.pop(0)
        return status, payload

    send.calls = calls
    return send


def completion_payload(text, pt=10, ct=5):
    return {
        "choices": [{"message": {"content": text}}],
        "usage": {"prompt_tokens": pt, "completion_tokens": ct},
    }


def test_http_provider_success_and_ledger():
    ledger = CostLedger()
    transport = fake_transport([(200, completion_payload("fine", 1000, 1000))])
    provider = HttpChatProvider("http://x", ledger=ledger, transport=transport,
                                sleep=lambda _: None)
    response = provider.chat(make_request("hi"))
    assert response.text == "fine"
    assert response.prompt_tokens == 1000
    assert ledger.total == Decimal("0.0035")
    body = transport.calls[0]
    assert body["messages"][0] == {"role": "system", "content": "summarization expert"}
    assert body["temperature"] == 0.0


def test_http_provider_retries_on_429_and_500():
    transport = fake_transport([
        (429, {"error": {"message": "slow down"}}),
        (500, {"error": {"message": "boom"}}),
        (200, completion_payload("ok")),
    ])
    delays = []
    provider = HttpChatProvider("http://x", transport=transport, sleep=delays.append)
    assert provider.chat(make_request()).text == "ok"
    assert delays == [1.0, 2.0]


def test_http_provider_context_overflow_is_distinct_and_immediate():
    transport = fake_transport([
        (400, {"error": {"code": "context_length_exceeded", "message": "too long"}}),
    ])
    provider = HttpChatProvider("http://x", transport=transport, sleep=lambda _: None)
    with pytest.raises(ContextLengthError):
        provider.chat(make_request())
    assert len(transport.calls) == 1


def test_http_provider_malformed_payload():
    transport = fake_transport([(200, {"nonsense": True})])
    provider = HttpChatProvider("http://x", transport=transport, sleep=lambda _: None)
    with pytest.raises(ProviderError):
        provider.chat(make_request())


def test_transcript_record_then_replay(tmp_path):
    path = tmp_path / "transcript.jsonl"
    inner = SyntheticChatProvider()
    prompt = "Describe the topic Social Rights based on what is written in x."
    with TranscriptRecorder(inner, path) as recorder:
        first = recorder.chat(make_request(prompt))

    replayer = TranscriptReplayer(path)
    again = replayer.chat(make_request(prompt))
    assert again == first
    replayer.assert_fully_consumed()


def test_transcript_replay_detects_drift(tmp_path):
    path = tmp_path / "transcript.jsonl"
    with TranscriptRecorder(SyntheticChatProvider(), path) as recorder:
        recorder.chat(make_request(
            "Describe the topic Social Rights based on what is written in x."))
    replayer = TranscriptReplayer(path)
    with pytest.raises(TranscriptMismatchError, match="drifted|unconsumed"):
        replayer.chat(make_request(
            "Describe the topic Economic Rights based on what is written in x."))


def test_transcript_records_consumed_once(tmp_path):
    path = tmp_path / "transcript.jsonl"
    prompt = "Describe the topic Social Rights based on what is written in x."
    with TranscriptRecorder(SyntheticChatProvider(), path) as recorder:
        recorder.chat(make_request(prompt))
    replayer = TranscriptReplayer(path)
    replayer.chat(make_request(prompt))
    with pytest.raises(TranscriptMismatchError):
        replayer.chat(make_request(prompt))


def test_transcript_unconsumed_detected(tmp_path):
    path = tmp_path / "transcript.jsonl"
    prompt = "Describe the topic Social Rights based on what is written in x."
    with TranscriptRecorder(SyntheticChatProvider(), path) as recorder:
        recorder.chat(make_request(prompt))
        recorder.chat(make_request(prompt))
    replayer = TranscriptReplayer(path)
    replayer.chat(make_request(prompt))
    with pytest.raises(TranscriptMismatchError, match="unconsumed"):
        replayer.assert_fully_consumed()

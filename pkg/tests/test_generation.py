"""Constrained decoding and the repair loop."""

import pytest

from ltlguard.backends import (
    END_OF_OUTPUT,
    AdversarialBackend,
    ScriptedBackend,
    TokenScriptBackend,
    mock_vocabulary,
)
from ltlguard.formulas import Formula
from ltlguard.generation import (
    NOT_LTL,
    DeadEnd,
    NotLtl,
    RepairFailure,
    constrained_generate,
    repair_loop,
)
from ltlguard.masking import Vocabulary, build_mask_store
from ltlguard.backends import Prompt
from ltlguard.prompts import SENTINEL
from ltlguard.syntax import parse

PROMPT = Prompt(system="sys", user="user")


def ids_for(vocab, *texts):
    lookup = {b: t for t, b in vocab.tokens.items()}
    return [lookup[t] for t in texts]


@pytest.fixture(scope="module")
def store():
    return build_mask_store(mock_vocabulary())


def test_scripted_emission_passes_through(store):
    vocab = store.vocabulary
    script = ids_for(vocab, b"G(", b"p", b" -> ", b"F ", b"q", b")")
    backend = TokenScriptBackend(vocab, script)
    out = constrained_generate(backend, PROMPT, store)
    assert out == "G(p -> F q)"
    assert isinstance(parse(out), Formula)


def test_adversarial_generations_always_parse(store):
    for seed in range(25):
        backend = AdversarialBackend(store.vocabulary, seed=seed)
        out = constrained_generate(backend, PROMPT, store, max_tokens=24)
        assert isinstance(out, str)
        assert isinstance(parse(out), Formula), out


def test_determinism_per_seed(store):
    backend = AdversarialBackend(store.vocabulary, seed=9)
    first = constrained_generate(backend, PROMPT, store, max_tokens=24)
    second = constrained_generate(backend, PROMPT, store, max_tokens=24)
    assert first == second


def test_sampling_is_seeded(store):
    backend = AdversarialBackend(store.vocabulary, seed=4)
    a = constrained_generate(
        backend, PROMPT, store, max_tokens=16, temperature=0.8, seed=7
    )
    b = constrained_generate(
        backend, PROMPT, store, max_tokens=16, temperature=0.8, seed=7
    )
    assert a == b
    assert isinstance(parse(a), Formula)


def test_eager_stop_forces_shortest_completion(store):
    # the script stops (proposes end-of-output) at a non-accepting state:
    # generation must steer to an accepting completion instead
    vocab = store.vocabulary
    backend = TokenScriptBackend(vocab, ids_for(vocab, b"G("))
    out = constrained_generate(backend, PROMPT, store)
    assert isinstance(parse(out), Formula)
    assert out.startswith("G(")


class EagerStopBackend(AdversarialBackend):
    """Always proposes end-of-output first; remaining scores seeded-random."""

    def next_token_distribution(self, prompt, generated_prefix):
        dist = super().next_token_distribution(prompt, generated_prefix)
        rest = [(tid, score) for tid, score in dist if tid != END_OF_OUTPUT]
        return [(END_OF_OUTPUT, 3.0)] + rest


def test_eos_always_top_forces_accepting_completion(store):
    for seed in range(20):
        backend = EagerStopBackend(store.vocabulary, seed=seed)
        out = constrained_generate(backend, PROMPT, store, max_tokens=16)
        assert isinstance(parse(out), Formula), out


def test_token_budget_still_yields_formula(store):
    backend = AdversarialBackend(store.vocabulary, seed=12)
    out = constrained_generate(backend, PROMPT, store, max_tokens=3)
    assert isinstance(parse(out), Formula)


def test_dead_end_when_vocabulary_cannot_close():
    vocab = Vocabulary({0: b"(", 1: b"p"})
    store = build_mask_store(vocab)
    backend = AdversarialBackend(vocab, seed=0, favorite=b"(")
    with pytest.raises(DeadEnd):
        constrained_generate(backend, PROMPT, store, max_tokens=4)


def test_sentinel_probe_short_circuits(store):
    words = SENTINEL.split(" ")
    tokens = {1000 + i: (w if i == 0 else " " + w).encode() for i, w in enumerate(words)}
    vocab_tokens = dict(mock_vocabulary().tokens)
    vocab_tokens.update(tokens)
    vocab = Vocabulary(vocab_tokens)
    backend = TokenScriptBackend(vocab, sorted(tokens))
    out = constrained_generate(backend, PROMPT, build_mask_store(vocab))
    assert out is NOT_LTL
    assert isinstance(out, NotLtl)


def test_requires_step_wise_backend(store):
    with pytest.raises(ValueError):
        constrained_generate(ScriptedBackend(responses=["x"]), PROMPT, store)


# repair loop


def test_repair_not_needed_for_valid_candidate():
    backend = ScriptedBackend(responses=[])
    result = repair_loop(backend, PROMPT, "G(p -> F q)", max_rounds=3)
    assert isinstance(result, Formula)
    assert backend.calls == []


def test_repair_fixes_after_one_round():
    backend = ScriptedBackend(responses=["G(p -> F q)"])
    result = repair_loop(backend, PROMPT, "G(p -> F q", max_rounds=3)
    assert isinstance(result, Formula)
    assert len(backend.calls) == 1
    # the repair prompt carries the broken candidate and the parser message
    assert "G(p -> F q" in backend.calls[0].user
    assert "Parser error" in backend.calls[0].user


def test_unfixable_candidate_records_all_attempts():
    backend = ScriptedBackend(responses=["G(", "G(", "G("])
    result = repair_loop(backend, PROMPT, "G(", max_rounds=3)
    assert isinstance(result, RepairFailure)
    assert len(result.attempts) == 4
    assert len(backend.calls) == 3


def test_zero_rounds_means_parse_only():
    backend = ScriptedBackend(responses=[])
    result = repair_loop(backend, PROMPT, "oops(", max_rounds=0)
    assert isinstance(result, RepairFailure)
    assert len(result.attempts) == 1


def test_negative_rounds_rejected():
    with pytest.raises(ValueError):
        repair_loop(ScriptedBackend(responses=[]), PROMPT, "p", max_rounds=-1)

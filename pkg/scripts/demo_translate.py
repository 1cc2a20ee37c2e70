#!/usr/bin/env python3
"""Translate a small conflicting requirement set end to end and print the
report, including the unsat core the consistency checker extracts.

Uses the deterministic rule-based mock backend, so it runs offline.
"""

import json

from ltlguard.backends import RuleBasedMock
from ltlguard.cli import default_corpus_path
from ltlguard.pipeline import PipelineConfig, report_json, translate_set
from ltlguard.retrieval import BuiltinEmbedding, build_index, load_corpus

REQUIREMENTS = [
    "every request must be granted",
    "requests will not be granted",
    "some request will be made",
]


def main() -> None:
    corpus = load_corpus(default_corpus_path())
    index = build_index(corpus, BuiltinEmbedding())
    cfg = PipelineConfig.from_variant("v6", seed=7)
    result = translate_set(REQUIREMENTS, cfg, index, RuleBasedMock(seed=7))
    print(json.dumps(report_json(result, cfg), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()

"""Prompt assets: system prompt, grammar block, repair and conflict templates.

The exact wording here is part of the tool's contract with its tests; change
it only together with the fixtures that pin it.
"""

from __future__ import annotations

from .syntax import GRAMMAR_TEXT, ParseDiagnostic

SENTINEL = "The provided text has nothing to do with LTL"

SYSTEM_PROMPT = """\
You are an expert in formal verification and temporal logic. You will be \
given textual requirements. Your task is to translate each requirement into \
LTL formula(s) using the following conventions:

- Temporal operators: G = always, F = eventually, X = next, U = until.

- Atomic propositions must be lowercase words (e.g., request, granted), not \
single uppercase letters.

- Output strictly and only the LTL formula(s). Do not include reasoning, \
explanations, steps, or natural language of any kind. The output should \
contain only the formula(s), nothing else.

- If the provided text is not related to LTL requirements at all, just \
output "The provided text has nothing to do with LTL"."""

GRAMMAR_BLOCK = (
    "Only output formulas accepted by this grammar:\n\n" + GRAMMAR_TEXT
)

EXAMPLES_HEADER = "Examples:"
TASK_HEADER = "Translate the following requirement(s) into LTL:"


def repair_block(candidate: str, diagnostic: ParseDiagnostic) -> str:
    return (
        "The previous output was not a valid LTL formula.\n"
        f"Output: {candidate}\n"
        f"Parser error at byte {diagnostic.offset}: expected "
        f"{diagnostic.expected}, found {diagnostic.found}.\n"
        "Respond with a corrected LTL formula only."
    )


def conflict_block(members: list[tuple[str, str, str]]) -> str:
    """members: (id, natural-language text, formula text) per core member."""
    lines = [
        "The following requirements were translated into LTL formulas that "
        "are jointly unsatisfiable (no execution can satisfy all of them):"
    ]
    for req_id, nl, ltl in members:
        lines.append(f'- {req_id}: "{nl}" => {ltl}')
    ids = ", ".join(req_id for req_id, _, _ in members)
    lines.append(
        f"Provide corrected LTL formulas for exactly these requirements: {ids}. "
        "Output one formula per requirement, nothing else."
    )
    return "\n".join(lines)

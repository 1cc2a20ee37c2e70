#!/usr/bin/env python3
"""Compute the two robustness fractions over hand-picked translation sets.

Shows how agreement modulo atom renaming differs from exact agreement across
rephrasings, and that robustness is scored independently of correctness.
"""

from ltlguard.evaluation import arr_score, rr_score
from ltlguard.syntax import parse_strict

RENAMING_SETS = {
    "all same template": [
        "G(request -> F granted)", "G(message -> F delivered)",
        "G(press -> F processed)", "G(order -> F shipped)",
        "G(error -> F logged)", "G(task -> F completed)",
    ],
    "half drifted to a recurrence shape": [
        "G(request -> F granted)", "G F delivered",
        "G(press -> F processed)", "G F shipped",
        "G(error -> F logged)", "G F completed",
    ],
}

REPHRASING_SETS = {
    "stable but wrong (still robust)": [
        "G(F delivered)", "G(X delivered -> F delivered)", "G(F delivered)",
    ],
    "one paraphrase diverged": [
        "G(message -> F delivered)", "G(delivered)",
        "G(message -> F delivered)",
    ],
}


def main() -> None:
    print("agreement modulo atom renaming:")
    for label, texts in RENAMING_SETS.items():
        score = arr_score([parse_strict(t) for t in texts])
        print(f"  {label}: {score}")
    print("exact agreement across rephrasings:")
    for label, texts in REPHRASING_SETS.items():
        score = rr_score([parse_strict(t) for t in texts])
        print(f"  {label}: {score}")


if __name__ == "__main__":
    main()

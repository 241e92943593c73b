"""Dialogue fact-checking pipeline.

Verifies the last utterance of a multi-turn conversation against a
document corpus: context-union document retrieval, learned rank-fusion
sentence retrieval, sub-sentence claim detection, and pluggable
three-way verification.
"""

__version__ = "0.1.0"

"""Offline export tooling.

Runs self-contained stand-in models over a dataset and dumps their outputs
into the TSV replay formats consumed by the dialcheck pipeline (document
score dumps, sentence embedding dumps, verdict dumps). The pipeline logic
itself lives entirely on the dialcheck side; this package only produces
files in the agreed schemas.
"""

__version__ = "0.1.0"

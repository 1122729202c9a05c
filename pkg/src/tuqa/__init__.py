"""Quality assessment for Jefferson-annotated speech transcripts.

Alignment and WER against a reference, per-minute statistics and deltas,
overlap-annotation checks and mismatch pre-tagging.
"""

__version__ = "0.1.0"

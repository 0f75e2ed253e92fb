"""Phishing URL classification with post-hoc, rule-based belief revision.

Statistical classifiers produce initial verdicts over lexical URL features;
an embedded stratified rule engine then revises those verdicts against
meta-tag evidence, withdrawing phishing alarms for pages that carry
descriptive metadata, with no retraining of the underlying models.
"""

__version__ = "0.1.0"

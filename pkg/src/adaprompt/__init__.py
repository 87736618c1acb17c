"""Adaptive chain-of-thought exemplar selection toolkit.

Builds few-shot exemplar sets for in-context learning by repeatedly asking a
model the remaining pool questions, measuring answer uncertainty, and routing
the most uncertain question to an annotator; ships baseline strategies, a
resumable session store, an annotation HTTP service, and a self-consistency
evaluation harness.
"""

__version__ = "0.1.0"

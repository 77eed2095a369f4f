"""framepick: thumbnail-candidate selection engine for long-form video.

Turns decoded frames plus precomputed model artifacts into ranked,
diverse thumbnail proposals per aspect ratio, and serves them to a human
reviewer through a filter/reweight/select workflow.
"""

__version__ = "0.1.0"

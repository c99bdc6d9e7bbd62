"""talkqa: subjective-study tooling and a four-branch quality model for
multi-subject talking-human videos."""

__version__ = "0.1.0"

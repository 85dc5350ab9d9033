"""Fine-tunes a sequence-to-sequence transformer on question/query pairs
and serves it behind the POST /translate contract."""

__version__ = "0.1.0"

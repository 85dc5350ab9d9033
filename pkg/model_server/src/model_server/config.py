"""Fine-tuning configuration."""

from dataclasses import dataclass, field

from .vocabulary import SYNTAX_TOKENS

# Sentinel base_model_id: build a small randomly-initialized model with a
# word-level tokenizer trained from the data, instead of downloading a
# pre-trained checkpoint.  Used by tests and air-gapped environments.
MINIATURE = "miniature"


@dataclass
class FinetuneConfig:
    base_model_id: str = "facebook/bart-base"
    special_tokens: list[str] = field(default_factory=lambda: list(SYNTAX_TOKENS))
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 5e-4
    seed: int = 13
    output_dir: str = "model-artifacts"
    max_length: int = 160
    num_beams: int = 1  # greedy by default

    def validate(self) -> None:
        if not self.special_tokens:
            raise ValueError("special_tokens must not be empty")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

"""Fine-tuning loop and artifact handling."""

import json
import logging
import random
from pathlib import Path

import torch
from torch.utils.data import DataLoader, Dataset
from transformers import (
    AutoModelForSeq2SeqLM,
    AutoTokenizer,
    BartConfig,
    BartForConditionalGeneration,
)

from .config import MINIATURE, FinetuneConfig
from .data import DataFormatError
from .tokenization import (
    ModelUnavailable,
    encode_source,
    encode_target,
    prepare_tokenizer,
)
from .vocabulary import unspaced_form

logger = logging.getLogger(__name__)


class OutOfMemoryGuidance(RuntimeError):
    def __init__(self, original: str):
        super().__init__(
            f"training ran out of memory ({original}); reduce batch_size "
            "or max_length in the fine-tune config")


class _PairDataset(Dataset):
    def __init__(self, pairs, tokenizer, max_length: int):
        if not pairs:
            raise DataFormatError("no training pairs")
        for index, pair in enumerate(pairs):
            if (not isinstance(pair, (tuple, list)) or len(pair) != 2
                    or not all(isinstance(x, str) and x for x in pair)):
                raise DataFormatError(
                    f"pair {index} must be two non-empty strings")
        self.rows = [
            (encode_source(tokenizer, question)[:max_length],
             encode_target(tokenizer, target)[:max_length])
            for question, target in pairs
        ]

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, index):
        return self.rows[index]


def _collate(batch, pad_id: int):
    src_len = max(len(s) for s, _ in batch)
    tgt_len = max(len(t) for _, t in batch)
    input_ids = torch.full((len(batch), src_len), pad_id, dtype=torch.long)
    attention = torch.zeros((len(batch), src_len), dtype=torch.long)
    labels = torch.full((len(batch), tgt_len), -100, dtype=torch.long)
    for row, (src, tgt) in enumerate(batch):
        input_ids[row, :len(src)] = torch.tensor(src)
        attention[row, :len(src)] = 1
        labels[row, :len(tgt)] = torch.tensor(tgt)
    return input_ids, attention, labels


def _miniature_model(cfg: FinetuneConfig, tokenizer) -> BartForConditionalGeneration:
    model_config = BartConfig(
        vocab_size=len(tokenizer),
        d_model=128,
        encoder_layers=2, decoder_layers=2,
        encoder_attention_heads=4, decoder_attention_heads=4,
        encoder_ffn_dim=256, decoder_ffn_dim=256,
        max_position_embeddings=512,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.eos_token_id,
        forced_bos_token_id=tokenizer.bos_token_id,
        forced_eos_token_id=tokenizer.eos_token_id,
    )
    return BartForConditionalGeneration(model_config)


def build_model(cfg: FinetuneConfig, tokenizer):
    if cfg.base_model_id == MINIATURE:
        return _miniature_model(cfg, tokenizer)
    try:
        model = AutoModelForSeq2SeqLM.from_pretrained(cfg.base_model_id)
    except (OSError, ValueError) as exc:
        raise ModelUnavailable(
            f"cannot load model {cfg.base_model_id!r}: {exc}") from None
    model.resize_token_embeddings(len(tokenizer))
    return model


class TranslationModel:
    """A trained model + tokenizer, ready to translate questions."""

    def __init__(self, model, tokenizer, max_length: int = 160):
        self.model = model
        self.tokenizer = tokenizer
        self.max_length = max_length
        self.model.eval()

    def translate(self, question: str, num_beams: int = 1) -> list[str]:
        """Ranked query texts; beam k of a k-beam request, greedy for 1."""
        encoded = self.tokenizer(question, return_tensors="pt",
                                 add_special_tokens=False)
        with torch.no_grad():
            outputs = self.model.generate(
                input_ids=encoded["input_ids"],
                attention_mask=encoded.get("attention_mask"),
                max_length=self.max_length,
                num_beams=max(1, num_beams),
                num_return_sequences=max(1, num_beams),
                do_sample=False,
            )
        texts = self.tokenizer.batch_decode(outputs, skip_special_tokens=True)
        return [unspaced_form(text) for text in texts]

    def save(self, output_dir) -> Path:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.model.save_pretrained(out)
        self.tokenizer.save_pretrained(out)
        (out / "translation_model.json").write_text(
            json.dumps({"max_length": self.max_length}), encoding="utf-8")
        return out

    @classmethod
    def load(cls, model_dir) -> "TranslationModel":
        from .server import ModelLoadError  # shared error type

        model_dir = Path(model_dir)
        try:
            tokenizer = AutoTokenizer.from_pretrained(model_dir)
            model = AutoModelForSeq2SeqLM.from_pretrained(model_dir)
        except (OSError, ValueError) as exc:
            raise ModelLoadError(f"cannot load artifacts from {model_dir}: "
                                 f"{exc}") from None
        extra = model_dir / "translation_model.json"
        max_length = 160
        if extra.is_file():
            max_length = json.loads(extra.read_text()).get("max_length", 160)
        return cls(model, tokenizer, max_length)


def fine_tune(pairs: list[tuple[str, str]], cfg: FinetuneConfig
              ) -> tuple[TranslationModel, list[float]]:
    """Train on question/query pairs; returns the model and the per-epoch
    mean losses.  Deterministic for a fixed seed up to framework-level
    nondeterminism (threaded CPU kernels may reorder float reductions)."""
    cfg.validate()
    if not pairs:
        raise DataFormatError("no training pairs")
    random.seed(cfg.seed)
    torch.manual_seed(cfg.seed)

    corpus = [text for pair in pairs for text in pair]
    tokenizer = prepare_tokenizer(cfg, corpus_texts=corpus)
    model = build_model(cfg, tokenizer)
    dataset = _PairDataset(pairs, tokenizer, cfg.max_length)
    generator = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(dataset, batch_size=cfg.batch_size, shuffle=True,
                        generator=generator,
                        collate_fn=lambda b: _collate(b, tokenizer.pad_token_id))
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    losses: list[float] = []
    model.train()
    try:
        for epoch in range(cfg.epochs):
            total = 0.0
            steps = 0
            for input_ids, attention, labels in loader:
                optimizer.zero_grad()
                out = model(input_ids=input_ids, attention_mask=attention,
                            labels=labels)
                out.loss.backward()
                optimizer.step()
                total += out.loss.item()
                steps += 1
            losses.append(total / steps)
            logger.info("epoch %d/%d loss %.4f", epoch + 1, cfg.epochs,
                        losses[-1])
    except (MemoryError, RuntimeError) as exc:
        if "memory" in str(exc).lower() or isinstance(exc, MemoryError):
            raise OutOfMemoryGuidance(str(exc)) from None
        raise

    trained = TranslationModel(model, tokenizer, cfg.max_length)
    if cfg.output_dir:
        trained.save(cfg.output_dir)
    return trained, losses


def exact_match_rate(model: TranslationModel,
                     pairs: list[tuple[str, str]]) -> float:
    """Fraction of pairs whose greedy translation equals the target."""
    hits = 0
    for question, target in pairs:
        if model.translate(question, num_beams=1)[0] == target:
            hits += 1
    return hits / len(pairs)

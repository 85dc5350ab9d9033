"""Tokenizer preparation: special tokens always encode to one id.

Two paths share one contract.  A pre-trained checkpoint's tokenizer is
extended with the special-token vocabulary; the miniature path trains a
word-level tokenizer from the corpus instead.  Either way the special
tokens are registered as unsplittable added tokens that survive
decoding, so generated query text keeps its keywords and relation IRIs
intact.
"""

from tokenizers import Tokenizer, models, pre_tokenizers, trainers
from transformers import AutoTokenizer, PreTrainedTokenizerFast
from transformers.tokenization_utils import AddedToken

from .config import MINIATURE, FinetuneConfig
from .vocabulary import spaced_form


class ModelUnavailable(RuntimeError):
    pass


def _register_special_tokens(tokenizer, special_tokens: list[str]) -> int:
    # normalized=False keeps exact-string matching; not marked "special"
    # so skip_special_tokens decoding does not erase query keywords.
    # Relation IRIs appear angle-bracketed in query text, so that form is
    # registered too; longest-match extraction then keeps the brackets.
    tokens = list(special_tokens)
    tokens += [f"<{tok}>" for tok in special_tokens if tok.startswith("http")]
    added = tokenizer.add_tokens([
        AddedToken(tok, normalized=False, lstrip=False, rstrip=False)
        for tok in tokens])
    return added


def _miniature_tokenizer(corpus_texts: list[str],
                         special_tokens: list[str]) -> PreTrainedTokenizerFast:
    base = Tokenizer(models.WordLevel(unk_token="<unk>"))
    base.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    trainer = trainers.WordLevelTrainer(
        special_tokens=["<pad>", "<s>", "</s>", "<unk>"], min_frequency=1)
    spaced = [spaced_form(t) for t in corpus_texts]
    base.train_from_iterator(spaced + corpus_texts, trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=base, model_max_length=512,
        pad_token="<pad>", bos_token="<s>", eos_token="</s>",
        unk_token="<unk>")
    return tokenizer


def prepare_tokenizer(cfg: FinetuneConfig,
                      corpus_texts: list[str] | None = None
                      ) -> PreTrainedTokenizerFast:
    """A tokenizer with the special-token vocabulary registered.

    Raises ModelUnavailable when the configured checkpoint cannot be
    loaded (no network, no cache).  The miniature path requires corpus
    texts to train its word vocabulary.
    """
    cfg.validate()
    if cfg.base_model_id == MINIATURE:
        if not corpus_texts:
            raise ValueError("the miniature tokenizer needs corpus texts")
        tokenizer = _miniature_tokenizer(corpus_texts, cfg.special_tokens)
    else:
        try:
            tokenizer = AutoTokenizer.from_pretrained(cfg.base_model_id)
        except (OSError, ValueError) as exc:
            raise ModelUnavailable(
                f"cannot load tokenizer {cfg.base_model_id!r}: {exc}") from None
    _register_special_tokens(tokenizer, cfg.special_tokens)
    return tokenizer


def encode_target(tokenizer, text: str) -> list[int]:
    """Token ids for one query target: bos ... eos over the spaced form."""
    ids = tokenizer(spaced_form(text), add_special_tokens=False)["input_ids"]
    return [tokenizer.bos_token_id, *ids, tokenizer.eos_token_id]


def encode_source(tokenizer, text: str) -> list[int]:
    ids = tokenizer(text, add_special_tokens=False)["input_ids"]
    return [tokenizer.bos_token_id, *ids, tokenizer.eos_token_id]

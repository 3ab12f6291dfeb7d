"""Neural response scorers behind the gateway's scorer wire protocol."""

__version__ = "0.1.0"

from neuralscorer.model import BiEncoder, CrossEncoder, EncoderConfig
from neuralscorer.tokenizer import Vocab, tokenize

__all__ = ["BiEncoder", "CrossEncoder", "EncoderConfig", "Vocab", "tokenize"]

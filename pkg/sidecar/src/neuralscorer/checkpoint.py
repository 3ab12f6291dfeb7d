"""Versioned model checkpoints: self-describing JSON header + parameter arrays."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from neuralscorer.model import BiEncoder, CrossEncoder, EncoderConfig
from neuralscorer.tokenizer import Vocab

FORMAT = "neural-scorer/1"


def save_model(model: CrossEncoder | BiEncoder, path: str | Path) -> None:
    header = {
        "format": FORMAT,
        "mode": "cross" if isinstance(model, CrossEncoder) else "bi",
        "config": asdict(model.config),
        "vocab": model.vocab.token_to_id,
    }
    arrays = {f"param__{k}": v for k, v in model.params.items()}
    np.savez(Path(path), __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)


def load_model(path: str | Path) -> CrossEncoder | BiEncoder:
    with np.load(Path(path)) as data:
        header = json.loads(bytes(data["__header__"]).decode())
        if header.get("format") != FORMAT:
            raise ValueError(f"unsupported checkpoint format {header.get('format')!r}")
        config = EncoderConfig(**header["config"])
        vocab = Vocab(token_to_id=header["vocab"])
        model = CrossEncoder(config, vocab) if header["mode"] == "cross" else BiEncoder(config, vocab)
        for key in data.files:
            if key.startswith("param__"):
                name = key[len("param__"):]
                model.params[name] = data[key].astype(np.float64)
    return model

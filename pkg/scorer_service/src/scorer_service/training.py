"""Fine-tuning loop: Adam, cross-entropy, frozen embeddings by default.

The best checkpoint by validation loss is kept.  With frozen embeddings
(the default), the token/position/segment embedding matrices are
excluded from the optimizer and are bit-identical before and after
training.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import torch
from torch import nn

from .data import TrainExample, split_by_query
from .model import (ModelConfig, PairClassifier, build_input, initialize,
                    load_checkpoint, pad_batch, save_checkpoint)
from .tokenizer import Tokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 3e-5
    freeze_embeddings: bool = True
    max_sequence_length: int = 512
    epochs: int = 3
    validation_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class TrainResult:
    checkpoint_dir: Path
    best_epoch: int
    train_losses: list[float] = field(default_factory=list)
    validation_losses: list[float] = field(default_factory=list)


def encode_batch(tokenizer: Tokenizer, batch: list[TrainExample],
                 max_sequence_length: int):
    encoded = [build_input(tokenizer, ex.query, ex.sentence, max_sequence_length)
               for ex in batch]
    tokens, segments, mask = pad_batch(encoded)
    labels = torch.tensor([ex.label for ex in batch], dtype=torch.long)
    return tokens, segments, mask, labels


def batch_loss(model: PairClassifier, tokenizer: Tokenizer,
               batch: list[TrainExample], max_sequence_length: int) -> torch.Tensor:
    tokens, segments, mask, labels = encode_batch(tokenizer, batch, max_sequence_length)
    logits = model(tokens, segments, mask)
    return nn.functional.cross_entropy(logits, labels)


def _epoch_loss(model, tokenizer, examples, config) -> float:
    model.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(examples), config.batch_size):
            batch = examples[start:start + config.batch_size]
            total += batch_loss(model, tokenizer, batch,
                                config.max_sequence_length).item() * len(batch)
    return total / len(examples)


def fine_tune(examples: list[TrainExample], config: TrainConfig,
              out_dir: str | Path, base_checkpoint: str | Path | None = None,
              model_config: ModelConfig | None = None) -> TrainResult:
    """Train on a 75/25-by-query split (default fractions) and keep the
    checkpoint with the lowest validation loss."""
    if not examples:
        raise ValueError("empty training set")
    train, val = split_by_query(examples, config.validation_fraction, config.seed)
    if not train:
        raise ValueError("query split left no training examples")
    if not val:
        val = train  # single-query corpora: select on train loss

    if base_checkpoint is not None:
        model, tokenizer, _ = load_checkpoint(base_checkpoint)
    else:
        tokenizer = Tokenizer.build(
            [ex.query for ex in train] + [ex.sentence for ex in train])
        if model_config is None:
            model_config = ModelConfig(vocab_size=len(tokenizer))
        # vocab comes from the data; positions must cover the sequence budget
        model_config = replace(
            model_config, vocab_size=len(tokenizer),
            max_positions=max(model_config.max_positions, config.max_sequence_length))
        model = initialize(tokenizer, model_config, seed=config.seed)

    model.set_embeddings_frozen(config.freeze_embeddings)
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)

    result = TrainResult(checkpoint_dir=Path(out_dir), best_epoch=-1)
    best_val = float("inf")
    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(len(train), generator=generator).tolist()
        shuffled = [train[i] for i in order]
        running = 0.0
        for start in range(0, len(shuffled), config.batch_size):
            batch = shuffled[start:start + config.batch_size]
            optimizer.zero_grad()
            loss = batch_loss(model, tokenizer, batch, config.max_sequence_length)
            loss.backward()
            optimizer.step()
            running += loss.item() * len(batch)
        train_loss = running / len(shuffled)
        val_loss = _epoch_loss(model, tokenizer, val, config)
        result.train_losses.append(train_loss)
        result.validation_losses.append(val_loss)
        logger.info("epoch %d: train loss %.4f, val loss %.4f", epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            result.best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    model.eval()
    save_checkpoint(out_dir, model, tokenizer, config.max_sequence_length)
    curve = {"config": asdict(config), "best_epoch": result.best_epoch,
             "train_loss": result.train_losses, "validation_loss": result.validation_losses}
    (Path(out_dir) / "training_curve.json").write_text(
        json.dumps(curve, indent=2) + "\n", encoding="utf-8")
    return result

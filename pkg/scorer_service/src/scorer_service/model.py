"""Compact transformer for query/sentence relevance classification.

The classifier consumes [CLS] query [SEP] sentence [SEP] with segment
ids distinguishing the two sides; the first position's final hidden
state feeds a linear layer and the relevance probability is the softmax
weight of the positive class.  Token/position/segment embeddings can be
frozen during fine-tuning, in which case they are bit-identical before
and after training.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .tokenizer import Tokenizer


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    dim: int = 64
    heads: int = 4
    layers: int = 1
    ffn_dim: int = 128
    dropout: float = 0.1
    max_positions: int = 512
    name: str = "pair-scorer-tiny"


def build_input(tokenizer: Tokenizer, query: str, sentence: str,
                max_sequence_length: int) -> tuple[list[int], list[int]]:
    """Token and segment ids for [CLS] Q [SEP] S [SEP], truncating the
    sentence side first (the query survives unless it alone overflows)."""
    if max_sequence_length < 4:
        raise ValueError("max_sequence_length must allow [CLS] Q [SEP] S [SEP]")
    q_ids = tokenizer.ids(query)
    s_ids = tokenizer.ids(sentence)
    budget = max_sequence_length - 3  # specials
    if len(q_ids) + len(s_ids) > budget:
        s_ids = s_ids[:max(budget - len(q_ids), 0)]
    if len(q_ids) + len(s_ids) > budget:
        q_ids = q_ids[:budget]
    ids = [tokenizer.cls_id] + q_ids + [tokenizer.sep_id] + s_ids + [tokenizer.sep_id]
    segments = [0] * (len(q_ids) + 2) + [1] * (len(s_ids) + 1)
    return ids, segments


class PairClassifier(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.dim, padding_idx=0)
        self.position_embedding = nn.Embedding(config.max_positions, config.dim)
        self.segment_embedding = nn.Embedding(2, config.dim)
        self.embed_norm = nn.LayerNorm(config.dim)
        self.embed_dropout = nn.Dropout(config.dropout)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim, nhead=config.heads, dim_feedforward=config.ffn_dim,
            dropout=config.dropout, batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.layers)
        self.classifier = nn.Linear(config.dim, 2)

    def embedding_parameters(self) -> list[nn.Parameter]:
        return [self.token_embedding.weight, self.position_embedding.weight,
                self.segment_embedding.weight]

    def set_embeddings_frozen(self, frozen: bool) -> None:
        for param in self.embedding_parameters():
            param.requires_grad_(not frozen)

    def forward(self, token_ids: torch.Tensor, segment_ids: torch.Tensor,
                padding_mask: torch.Tensor) -> torch.Tensor:
        """Logits of shape (batch, 2); padding_mask is True at pad slots."""
        positions = torch.arange(token_ids.size(1), device=token_ids.device)
        x = (self.token_embedding(token_ids)
             + self.position_embedding(positions)[None, :, :]
             + self.segment_embedding(segment_ids))
        x = self.embed_dropout(self.embed_norm(x))
        x = self.encoder(x, src_key_padding_mask=padding_mask)
        return self.classifier(x[:, 0, :])


def pad_batch(batch: list[tuple[list[int], list[int]]],
              device: torch.device | str = "cpu"):
    """Stack variable-length (ids, segments) pairs into padded tensors."""
    width = max(len(ids) for ids, _ in batch)
    tokens = torch.zeros((len(batch), width), dtype=torch.long, device=device)
    segments = torch.zeros((len(batch), width), dtype=torch.long, device=device)
    mask = torch.ones((len(batch), width), dtype=torch.bool, device=device)
    for row, (ids, segs) in enumerate(batch):
        tokens[row, :len(ids)] = torch.tensor(ids, dtype=torch.long)
        segments[row, :len(segs)] = torch.tensor(segs, dtype=torch.long)
        mask[row, :len(ids)] = False
    return tokens, segments, mask


CHECKPOINT_FILES = ("config.json", "vocab.json", "weights.pt")


def save_checkpoint(directory: str | Path, model: PairClassifier,
                    tokenizer: Tokenizer, max_sequence_length: int) -> Path:
    """Checkpoint layout: config.json (model dims + sequence budget),
    vocab.json (token -> id), weights.pt (state dict)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {"model": asdict(model.config),
               "max_sequence_length": max_sequence_length}
    (directory / "config.json").write_text(json.dumps(payload, indent=2),
                                           encoding="utf-8")
    tokenizer.save(directory / "vocab.json")
    torch.save(model.state_dict(), directory / "weights.pt")
    return directory


def load_checkpoint(directory: str | Path) -> tuple[PairClassifier, Tokenizer, int]:
    directory = Path(directory)
    missing = [name for name in CHECKPOINT_FILES if not (directory / name).exists()]
    if missing:
        raise FileNotFoundError(f"{directory}: missing checkpoint files {missing}")
    payload = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    config = ModelConfig(**payload["model"])
    tokenizer = Tokenizer.load(directory / "vocab.json")
    model = PairClassifier(config)
    model.load_state_dict(torch.load(directory / "weights.pt", weights_only=True))
    model.eval()
    return model, tokenizer, int(payload["max_sequence_length"])


def initialize(tokenizer: Tokenizer, config: ModelConfig, seed: int = 0) -> PairClassifier:
    """Deterministic fresh model; the local stand-in for a pretrained base."""
    torch.manual_seed(seed)
    return PairClassifier(config)

from __future__ import annotations

import random

import pytest

from scorer_service.data import TrainExample
from scorer_service.model import ModelConfig
from scorer_service.training import TrainConfig, fine_tune

_TOPICS = [
    ("red fox", ["fox", "red"]),
    ("blue heron", ["heron", "blue"]),
    ("green turtle", ["turtle", "green"]),
    ("silver wolf", ["wolf", "silver"]),
    ("golden eagle", ["eagle", "golden"]),
    ("black swan", ["swan", "black"]),
    ("white hare", ["hare", "white"]),
    ("grey seal", ["seal", "grey"]),
]

_FILLER = ("the a near by was seen today river forest meadow harbor cliff "
           "marsh valley ridge shore").split()


def make_examples(n_per_topic: int = 8, seed: int = 5) -> list[TrainExample]:
    """Relevance is term presence: positive sentences mention both query
    words, negatives mention neither."""
    rng = random.Random(seed)
    examples = []
    for query, words in _TOPICS:
        for i in range(n_per_topic):
            filler = rng.choices(_FILLER, k=5)
            if i % 2 == 0:
                sentence = " ".join([words[0]] + filler[:2] + [words[1]] + filler[2:])
                label = 1
            else:
                sentence = " ".join(filler + rng.choices(_FILLER, k=2))
                label = 0
            examples.append(TrainExample(query, sentence, label))
    return examples


TOY_TRAIN = TrainConfig(batch_size=8, learning_rate=3e-3, epochs=12,
                        max_sequence_length=64, seed=3)
TOY_MODEL = ModelConfig(vocab_size=0, dim=32, heads=2, layers=1, ffn_dim=64,
                        max_positions=64, name="toy-pair-scorer")


@pytest.fixture(scope="session")
def examples():
    return make_examples()


@pytest.fixture(scope="session")
def toy_checkpoint(tmp_path_factory, examples):
    out = tmp_path_factory.mktemp("ckpt") / "toy"
    fine_tune(examples, TOY_TRAIN, out, model_config=TOY_MODEL)
    return out

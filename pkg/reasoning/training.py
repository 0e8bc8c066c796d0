"""
Addestramento della testa a 4 puntatori: cross-entropy sulle 4 colonne,
Adam con warm-up lineare, batch e seed come da configurazione.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import asdict
from typing import List, Sequence, Tuple

import numpy as np
import torch
from transformers import get_linear_schedule_with_warmup

from .config import TrainConfig
from .encoders import ContextualEncoder, TokenizedQuestion
from .exceptions import AlignmentError, OverLengthError
from .ingest import PointerAnnotation
from .pointer import PointerHead

logger = logging.getLogger(__name__)

Example = Tuple[TokenizedQuestion, torch.Tensor]


def random_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.cuda.manual_seed_all(seed)


def gold_subtokens(tokenized: TokenizedQuestion, ann: PointerAnnotation) -> List[int]:
    """Inizio entità -> primo sub-token della parola, fine -> ultimo sub-token."""
    (s1, e1), (s2, e2) = ann.entity1, ann.entity2
    return [
        tokenized.first_subtoken(s1),
        tokenized.last_subtoken(e1),
        tokenized.first_subtoken(s2),
        tokenized.last_subtoken(e2),
    ]


def prepare_examples(data: Sequence[PointerAnnotation], encoder: ContextualEncoder) -> List[Example]:
    examples = []
    for k, ann in enumerate(data):
        try:
            tokenized = encoder.tokenize(ann.question_text)
            gold = gold_subtokens(tokenized, ann)
        except (AlignmentError, OverLengthError) as exc:
            logger.warning("Annotazione %d scartata: %s", k, exc)
            continue
        examples.append((tokenized, torch.tensor(gold)))
    return examples


def example_loss(head: PointerHead, encoder: ContextualEncoder, example: Example) -> torch.Tensor:
    tokenized, gold = example
    log_probs = head(encoder.embed(tokenized))  # (n, 4)
    # somma delle cross-entropy delle 4 colonne
    return -log_probs[gold, torch.arange(4)].sum()


def train_pointer_head(
    data: Sequence[PointerAnnotation],
    encoder: ContextualEncoder,
    config: TrainConfig,
) -> PointerHead:
    random_seed(config.seed)
    examples = prepare_examples(data, encoder)
    if not examples:
        raise AlignmentError("nessuna annotazione utilizzabile per l'addestramento")

    head = PointerHead(encoder.hidden_size)
    params = list(head.parameters())
    finetune = config.finetune_encoder and any(True for _ in encoder.parameters())
    if finetune:
        params += list(encoder.parameters())
    encoder.train(finetune)

    steps_per_epoch = math.ceil(len(examples) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    optimizer = torch.optim.Adam(params, lr=config.learning_rate)
    scheduler = get_linear_schedule_with_warmup(
        optimizer,
        num_warmup_steps=int(config.warmup_fraction * total_steps),
        num_training_steps=total_steps,
    )
    generator = torch.Generator().manual_seed(config.seed)

    best_loss, stale, history = math.inf, 0, []
    for epoch in range(config.epochs):
        order = torch.randperm(len(examples), generator=generator).tolist()
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start:start + config.batch_size]]
            optimizer.zero_grad()
            loss = torch.stack([example_loss(head, encoder, ex) for ex in batch]).mean()
            loss.backward()
            optimizer.step()
            scheduler.step()
            epoch_loss += loss.item() * len(batch)
        epoch_loss /= len(examples)
        history.append(epoch_loss)
        logger.debug("Epoca %d: loss %.6f", epoch + 1, epoch_loss)

        if epoch_loss < best_loss - config.min_delta:
            best_loss, stale = epoch_loss, 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("Early stopping all'epoca %d (loss %.6f)", epoch + 1, epoch_loss)
                break

    encoder.train(False)
    head.metadata.update({
        "seed": config.seed,
        "config": asdict(config),
        "final_loss": history[-1],
        "epochs_run": len(history),
        "examples": len(examples),
        "skipped": len(data) - len(examples),
        "finetuned_encoder": finetune,
    })
    logger.info(
        "Pointer addestrato (seed %d): %d esempi, loss finale %.6f",
        config.seed, len(examples), history[-1],
    )
    return head

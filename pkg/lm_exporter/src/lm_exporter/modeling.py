"""Encoder construction and the per-fold fine-tuning loop."""
from __future__ import annotations

import random
from pathlib import Path

import numpy as np
import torch
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
    BertTokenizerFast,
    get_linear_schedule_with_warmup,
)

from lm_exporter.config import ExporterError, FinetuneSpec

TINY_HIDDEN = 32


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed % (2**63 - 1))


def build_tiny_vocab(texts: list[str], out_dir: Path) -> Path:
    tokens = sorted({tok for text in texts for tok in text.split()})
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + tokens
    path = Path(out_dir) / "tiny_vocab.txt"
    path.write_text("\n".join(vocab) + "\n")
    return path


def build_model_and_tokenizer(spec: FinetuneSpec, texts: list[str], work_dir: Path):
    """Pretrained encoder + tokenizer, or a small random-init one for CI."""
    if spec.tiny:
        vocab_path = build_tiny_vocab(texts, work_dir)
        tokenizer = BertTokenizerFast(vocab_file=str(vocab_path))
        config = BertConfig(
            vocab_size=tokenizer.vocab_size,
            hidden_size=TINY_HIDDEN,
            num_hidden_layers=2,
            num_attention_heads=2,
            intermediate_size=64,
            max_position_embeddings=spec.max_seq_len + 2,
            num_labels=2,
        )
        model = BertForSequenceClassification(config)
    else:
        tokenizer = AutoTokenizer.from_pretrained(spec.model_name)
        model = AutoModelForSequenceClassification.from_pretrained(
            spec.model_name, num_labels=2
        )
    return model, tokenizer


def encode_batch(tokenizer, texts: list[str], max_seq_len: int):
    return tokenizer(
        texts,
        truncation=True,
        max_length=max_seq_len,
        padding=True,
        return_tensors="pt",
    )


def was_truncated(tokenizer, text: str, max_seq_len: int) -> bool:
    ids = tokenizer(text, truncation=False)["input_ids"]
    return len(ids) > max_seq_len


def finetune(model, tokenizer, texts, labels, spec: FinetuneSpec, seed: int):
    """Fine-tune for spec.epochs with AdamW, linear warmup, weight decay."""
    seed_everything(seed)
    model.train()
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=spec.learning_rate, weight_decay=spec.weight_decay
    )
    n = len(texts)
    steps_per_epoch = (n + spec.batch_size - 1) // spec.batch_size
    total_steps = max(1, steps_per_epoch * spec.epochs)
    scheduler = get_linear_schedule_with_warmup(
        optimizer, num_warmup_steps=spec.warmup_steps, num_training_steps=total_steps
    )
    order_rng = np.random.default_rng(seed)
    target = torch.tensor(labels, dtype=torch.long)
    for _ in range(spec.epochs):
        order = order_rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            batch = encode_batch(tokenizer, [texts[i] for i in idx], spec.max_seq_len)
            out = model(**batch, labels=target[idx])
            out.loss.backward()
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()
    model.eval()
    return model


@torch.no_grad()
def predict_probs(model, tokenizer, texts: list[str], max_seq_len: int) -> np.ndarray:
    model.eval()
    batch = encode_batch(tokenizer, texts, max_seq_len)
    logits = model(**batch).logits.double()
    probs = torch.softmax(logits, dim=-1).numpy()
    return probs / probs.sum(axis=1, keepdims=True)


@torch.no_grad()
def pooled_embeddings(model, tokenizer, texts: list[str], max_seq_len: int) -> np.ndarray:
    """Pooled classification-token vectors from the (frozen) encoder."""
    model.eval()
    batch = encode_batch(tokenizer, texts, max_seq_len)
    encoder = getattr(model, "bert", None) or getattr(model, "base_model")
    out = encoder(
        input_ids=batch["input_ids"],
        attention_mask=batch["attention_mask"],
        token_type_ids=batch.get("token_type_ids"),
    )
    pooled = out.pooler_output
    if pooled is None:
        raise ExporterError("encoder has no pooled output")
    return pooled.double().numpy()

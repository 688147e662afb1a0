"""Span-based pronoun resolution: training, prediction, and evaluation."""

from prn._core import (
    CorpusStats,
    DocLinks,
    Document,
    EmbeddingMatrix,
    EvalReport,
    ModelParams,
    PronounLink,
    PronounType,
    ScoreOptions,
    Span,
    Token,
    TrainConfig,
    TrainLogEntry,
    TrainResult,
    corpus_stats,
    evaluate_model,
    hash_embeddings,
    init_params,
    load_checkpoint,
    load_corpus,
    load_embeddings,
    parse_conll,
    pretrain_detector,
    report_table,
    resolve_document,
    save_checkpoint,
    save_corpus,
    score_links,
    serialize_conll,
    split_corpus,
    synthetic_corpus,
    total_loss,
    train,
    write_embeddings,
)

__all__ = [
    "CorpusStats",
    "DocLinks",
    "Document",
    "EmbeddingMatrix",
    "EvalReport",
    "ModelParams",
    "PronounLink",
    "PronounType",
    "ScoreOptions",
    "Span",
    "Token",
    "TrainConfig",
    "TrainLogEntry",
    "TrainResult",
    "corpus_stats",
    "evaluate_model",
    "hash_embeddings",
    "init_params",
    "load_checkpoint",
    "load_corpus",
    "load_embeddings",
    "parse_conll",
    "pretrain_detector",
    "report_table",
    "resolve_document",
    "save_checkpoint",
    "save_corpus",
    "score_links",
    "serialize_conll",
    "split_corpus",
    "synthetic_corpus",
    "total_loss",
    "train",
    "write_embeddings",
]

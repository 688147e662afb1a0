import math

import pytest

import prn


@pytest.fixture(scope="module")
def corpus():
    docs = prn.synthetic_corpus(seed=11, n_docs=4, vocab_size=30)
    embs = prn.hash_embeddings(docs, dim=8, seed=11)
    return docs, embs


def test_corpus_round_trip(corpus):
    docs, _ = corpus
    text = prn.serialize_conll(docs)
    again = prn.parse_conll(text)
    assert prn.serialize_conll(again) == text
    stats = prn.corpus_stats(docs)
    assert stats.documents == 4
    assert stats.tokens == sum(d.size() for d in docs)


def test_spans_and_types():
    s = prn.Span(2, 5)
    assert s.width() == 4
    assert prn.PronounType.PERSONAL != prn.PronounType.NONE


def test_train_predict_evaluate(corpus, tmp_path):
    docs, embs = corpus
    cfg = prn.TrainConfig()
    cfg.hidden = 8
    cfg.feature_dim = 4
    cfg.epochs = 2
    cfg.patience = 1
    cfg.dev_fraction = 0.0
    cfg.seed = 3
    result = prn.train(docs, docs, embs, cfg)
    assert len(result.log) >= 1
    assert all(math.isfinite(e.train_loss) for e in result.log)

    path = str(tmp_path / "model.prn")
    prn.save_checkpoint(result.params, cfg, path)
    loaded, loaded_cfg = prn.load_checkpoint(path)
    assert loaded_cfg.hidden == 8
    # saving quantizes to f32, so equality starts from the first loaded copy
    prn.save_checkpoint(loaded, cfg, path)
    again, _ = prn.load_checkpoint(path)
    assert again == loaded

    opts = prn.ScoreOptions.from_config(cfg)
    links = prn.resolve_document(docs[0], embs[0], loaded, opts)
    assert all(link.pronoun.width() == 1 for link in links)

    report = prn.evaluate_model(docs, embs, loaded, opts)
    assert 0.0 <= report.f1 <= 100.0
    table = prn.report_table([("smoke", report)])
    assert "Precision" in table and "smoke" in table


def test_checkpoint_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.prn"
    bad.write_bytes(b"NOPE")
    with pytest.raises(Exception):
        prn.load_checkpoint(str(bad))

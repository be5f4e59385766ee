# Copyright 2026 The medenc Authors
# SPDX-License-Identifier: Apache-2.0

import json

import numpy as np
import pytest

import medenc

TEXTS = ["fever and cough", "cough with fever", "headache and fever", "unable to sleep"]


def test_vocab_round_trip():
    vocab = medenc.Vocab.train(TEXTS, 120)
    enc = vocab.encode("fever and cough")
    assert enc["ids"][0] == 2 and enc["ids"][-1] == 3
    assert vocab.decode(enc["ids"]) == "fever and cough"
    assert medenc.Vocab.parse(vocab.serialize()).serialize() == vocab.serialize()


def test_pair_segments():
    vocab = medenc.Vocab.train(TEXTS, 120)
    enc = vocab.encode_pair("fever", "cough")
    assert enc["segments"][0] == 0 and enc["segments"][-1] == 1


def test_invalid_target_size_raises():
    with pytest.raises(medenc.ConfigError):
        medenc.Vocab.train(TEXTS, 3)


def test_checkpoint_save_load(tmp_path):
    vocab = medenc.Vocab.train(TEXTS, 120)
    config = medenc.EncoderConfig.tiny(len(vocab))
    config.dropout = 0.0
    ckpt = medenc.Checkpoint.init(config, 5)
    path = tmp_path / "tiny.ckpt"
    ckpt.save(path)
    back = medenc.Checkpoint.load(path)
    assert back.digest() == ckpt.digest()
    ids = vocab.encode("fever and cough")["ids"]
    h1 = ckpt.hidden_states(ids)
    assert h1.shape == (len(ids), 64)
    np.testing.assert_array_equal(h1, back.hidden_states(ids))


def test_param_count():
    assert medenc.EncoderConfig.tiny(1000).param_count() == 177704


def test_schedules():
    assert medenc.lr_at("pretraining", 40000, 20000) == 5e-5
    assert medenc.lr_at("finetuning", 1000, 300) == 3e-5
    assert medenc.lr_at("finetuning", 1000, 1000) == 0.0


def test_overall_and_rounding():
    tasks = {
        "top3": [47.45, 70.44],
        "symrec": [34.94, 52.05],
        "danet": [71.48],
        "nli": [77.29],
        "ner": [96.47, 73.15],
    }
    assert medenc.round_half_up(medenc.overall(tasks)) == pytest.approx(67.20, abs=0.01)
    with pytest.raises(medenc.ContractError):
        medenc.overall({"nli": [50.0]})


def test_score_files(tmp_path):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    rows = [("a", "yes"), ("b", "no")]
    gold.write_text(
        "".join(json.dumps({"id": i, "context": "c", "question": "q", "answer": y}) + "\n" for i, y in rows)
    )
    pred.write_text(json.dumps({"id": "a", "prediction": "yes"}) + "\n" + json.dumps({"id": "b", "prediction": "yes"}) + "\n")
    assert medenc.score("danet", gold, pred) == {"accuracy": 50.0}


def test_gradcheck_passes():
    results = medenc.gradcheck()
    assert len(results) >= 17
    assert all(r["passed"] for r in results)


def test_cli_usage_error():
    code, _, err = medenc.run_cli(["no-such-command"])
    assert code == 2 and err

"""Annotation conversion: phone mapping, splits, skip policy, round trip."""

import json
import logging
import os

import pytest
from logitgop import load_manifest, read_logits, resolve_logits_path
from logitgop.evalkit import effective_labels

from gopl_extractor import (
    ExtractionError,
    convert_speechocean,
    load_phone_map,
)
from gopl_extractor import cli
from gopl_extractor.speechocean import normalize_phone

from conftest import UTTS

# tiny map onto the test model's inventory (a, e, d, s, m, k)
PHONE_MAP = {"D": "d", "AE": "e", "S": "s", "M": "m", "K": "k", "AH": "a"}

SCORES = {
    UTTS[0]: {  # train; one weak phone
        "text": "DAS",
        "words": [
            {"phones": ["D", "AE0"], "phones-accuracy": [2.0, 2.0]},
            {"phones": ["S"], "phones-accuracy": [1.0]},
        ],
    },
    UTTS[1]: {  # test; every phone perfect
        "text": "MKDSA",
        "words": [
            {
                "phones": ["M", "K", "D", "S", "AE"],
                "phones-accuracy": [2, 2, 2, 2, 2],
            }
        ],
    },
    UTTS[2]: {  # train; contains a phone outside the map
        "text": "Z",
        "words": [{"phones": ["ZZ"], "phones-accuracy": [2.0]}],
    },
    UTTS[3]: {  # present in annotations but in neither split listing
        "text": "D",
        "words": [{"phones": ["D"], "phones-accuracy": [2.0]}],
    },
    "000050055": {  # listed in train but never extracted
        "text": "D",
        "words": [{"phones": ["D"], "phones-accuracy": [2.0]}],
    },
}


@pytest.fixture()
def dataset_root(tmp_path):
    root = tmp_path / "dataset"
    (root / "resource").mkdir(parents=True)
    (root / "resource" / "scores.json").write_text(
        json.dumps(SCORES), encoding="utf-8"
    )
    (root / "train").mkdir()
    (root / "train" / "text").write_text(
        f"{UTTS[0]} DAS\n{UTTS[2]} Z\n000050055 D\n", encoding="utf-8"
    )
    (root / "test").mkdir()
    (root / "test" / "text").write_text(f"{UTTS[1]} MKDSA\n", encoding="utf-8")
    return root


@pytest.fixture()
def phone_map_path(tmp_path):
    p = tmp_path / "map.json"
    p.write_text(json.dumps(PHONE_MAP), encoding="utf-8")
    return p


def test_normalize_phone():
    assert normalize_phone("AE0") == "AE"
    assert normalize_phone("AH*") == "AH"
    assert normalize_phone("ah1*") == "AH"
    assert normalize_phone("d") == "D"


def test_packaged_phone_map_loads():
    table = load_phone_map()
    assert len(table) == 39
    assert table["DH"] == "ð"
    assert not any(k.startswith("_") for k in table)


def test_phone_map_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ExtractionError, match="string table"):
        load_phone_map(bad)
    bad.write_text("not json", encoding="utf-8")
    with pytest.raises(ExtractionError, match="not valid JSON"):
        load_phone_map(bad)
    with pytest.raises(ExtractionError, match="cannot read"):
        load_phone_map(tmp_path / "absent.json")


def test_convert_end_to_end(dataset_root, phone_map_path, extraction, tmp_path,
                            caplog):
    out = tmp_path / "manifest.json"
    with caplog.at_level(logging.WARNING, logger="gopl_extractor"):
        stats = convert_speechocean(
            dataset_root, extraction["fragment"], out, phone_map_path
        )
    assert stats == {
        "utterances_converted": 2,
        "utterances_skipped": 3,
        "phonemes_total": 8,
        "phonemes_below_2": 1,
    }
    # each skipped utterance is reported with its reason
    text = caplog.text
    assert UTTS[2] in text and "unmappable phone 'ZZ'" in text
    assert UTTS[3] in text and "not in the train or test listing" in text
    assert "000050055" in text and "no extracted tensor" in text

    manifest = load_manifest(out)
    by_id = {u.utt_id: u for u in manifest.utterances}
    assert set(by_id) == {UTTS[0], UTTS[1]}

    u1 = by_id[UTTS[0]]
    idx = {s: i for i, s in enumerate(manifest.inventory.symbols)}
    assert u1.canonical_phonemes == (idx["d"], idx["e"], idx["s"])
    assert u1.human_scores == (2.0, 2.0, 1.0)
    assert u1.split == "train"
    assert u1.frame_stride_ms == 20.0

    u2 = by_id[UTTS[1]]
    assert u2.canonical_phonemes == (
        idx["m"], idx["k"], idx["d"], idx["s"], idx["e"]
    )
    assert u2.human_scores == (2.0,) * 5
    assert u2.split == "test"
    # all phones scored 2: default binarization flags nothing
    labels = effective_labels([None] * 5, u2.human_scores, 2.0)
    assert labels == [False] * 5

    # manifest inventory is exactly the extractor's inventory
    frag = json.loads(open(extraction["fragment"], encoding="utf-8").read())
    assert list(manifest.inventory.symbols) == frag["inventory"]["symbols"]
    assert manifest.inventory.blank_index == frag["inventory"]["blank_index"]

    # referenced tensors resolve and load against this inventory
    for u in manifest.utterances:
        p = read_logits(
            resolve_logits_path(out, u),
            expected_v=len(manifest.inventory),
            utt_id=u.utt_id,
        )
        assert p.logits.shape[1] == len(manifest.inventory)


def test_convert_deterministic(dataset_root, phone_map_path, extraction,
                               tmp_path):
    a = tmp_path / "m1.json"
    b = tmp_path / "m2.json"
    convert_speechocean(dataset_root, extraction["fragment"], a, phone_map_path)
    convert_speechocean(dataset_root, extraction["fragment"], b, phone_map_path)
    assert a.read_bytes() == b.read_bytes()


def test_tensor_paths_resolve_from_manifest_location(dataset_root,
                                                     phone_map_path,
                                                     extraction, tmp_path):
    # the manifest lands in a different directory than the tensors; its
    # relative paths must still point at them
    out = tmp_path / "deep" / "nested" / "manifest.json"
    out.parent.mkdir(parents=True)
    convert_speechocean(dataset_root, extraction["fragment"], out, phone_map_path)
    doc = json.loads(out.read_text())
    for u in doc["utterances"]:
        assert os.path.basename(u["logits_path"]) == f"{u['utt_id']}.gopl"
        assert os.path.exists(os.path.join(out.parent, u["logits_path"]))


def test_missing_annotation_file(tmp_path, phone_map_path, extraction):
    with pytest.raises(ExtractionError, match="missing annotation file"):
        convert_speechocean(
            tmp_path, extraction["fragment"], tmp_path / "m.json",
            phone_map_path,
        )


def test_missing_split_listing(dataset_root, phone_map_path, extraction,
                               tmp_path):
    os.unlink(dataset_root / "test" / "text")
    with pytest.raises(ExtractionError, match="missing split listing"):
        convert_speechocean(
            dataset_root, extraction["fragment"], tmp_path / "m.json",
            phone_map_path,
        )


def test_score_outside_range_skips_utterance(dataset_root, phone_map_path,
                                             extraction, tmp_path, caplog):
    doc = json.loads((dataset_root / "resource" / "scores.json").read_text())
    doc[UTTS[0]]["words"][0]["phones-accuracy"] = [2.0, 3.5]
    (dataset_root / "resource" / "scores.json").write_text(json.dumps(doc))
    with caplog.at_level(logging.WARNING, logger="gopl_extractor"):
        stats = convert_speechocean(
            dataset_root, extraction["fragment"], tmp_path / "m.json",
            phone_map_path,
        )
    assert stats["utterances_converted"] == 1
    assert "outside [0, 2]" in caplog.text


def test_ragged_word_annotation_skips(dataset_root, phone_map_path, extraction,
                                      tmp_path, caplog):
    doc = json.loads((dataset_root / "resource" / "scores.json").read_text())
    doc[UTTS[1]]["words"][0]["phones-accuracy"] = [2.0]  # 5 phones, 1 score
    (dataset_root / "resource" / "scores.json").write_text(json.dumps(doc))
    with caplog.at_level(logging.WARNING, logger="gopl_extractor"):
        stats = convert_speechocean(
            dataset_root, extraction["fragment"], tmp_path / "m.json",
            phone_map_path,
        )
    assert stats["utterances_converted"] == 1
    assert "accuracy scores" in caplog.text


def test_nothing_survives_is_an_error(dataset_root, extraction, tmp_path):
    empty_map = tmp_path / "empty-ish.json"
    empty_map.write_text(json.dumps({"QQ": "d"}), encoding="utf-8")
    with pytest.raises(ExtractionError, match="no utterance survived"):
        convert_speechocean(
            dataset_root, extraction["fragment"], tmp_path / "m.json",
            empty_map,
        )


def test_converted_manifest_drives_scoring_pipeline(dataset_root,
                                                    phone_map_path,
                                                    extraction, tmp_path):
    # the whole point of conversion: the manifest must feed the scoring
    # toolkit's align -> score -> evaluate chain unchanged
    from logitgop import cli as gop_cli

    manifest = tmp_path / "manifest.json"
    convert_speechocean(dataset_root, extraction["fragment"], manifest,
                        phone_map_path)
    ali = tmp_path / "ali.jsonl"
    scores = tmp_path / "scores.csv"
    evaldir = tmp_path / "eval"
    assert gop_cli.main(["align", "--manifest", str(manifest),
                         "--out", str(ali)]) == 0
    assert gop_cli.main(["score", "--manifest", str(manifest),
                         "--alignments", str(ali), "--out", str(scores)]) == 0
    assert gop_cli.main(["evaluate", "--scores", str(scores),
                         "--out", str(evaldir)]) == 0
    doc = json.loads((evaldir / "eval_report.json").read_text())
    assert set(doc["metrics"]) == {"dnn", "max_logit", "margin", "var_logit",
                                   "combined"}
    for row in doc["metrics"].values():
        assert "mcc" in row and "auc_mcc_max" in row


def test_cli_convert(dataset_root, phone_map_path, extraction, tmp_path,
                     capsys):
    out = tmp_path / "manifest.json"
    rc = cli.main([
        "convert-speechocean", "--root", str(dataset_root),
        "--extraction", str(extraction["fragment"]),
        "--out", str(out), "--phone-map", str(phone_map_path),
    ])
    assert rc == 0
    assert load_manifest(out) is not None

    rc = cli.main([
        "convert-speechocean", "--root", str(tmp_path / "nowhere"),
        "--extraction", str(extraction["fragment"]),
        "--out", str(out), "--phone-map", str(phone_map_path),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err

import json
import math
from fractions import Fraction

import pytest

from kpsum.corpus import Dataset, DocumentPair
from kpsum.errors import EvaluationError
from kpsum.matching import MatchConfig
from kpsum.metrics import (
    RecallAtK,
    RougeScore,
    evaluate_run,
    recall_at_k,
    rouge1,
    rougeL,
    rouge_tokens,
)
from kpsum.rng import SplitMix64
from kpsum.selection import Keyphrase, KeyphraseSet

from conftest import fuzz_oracle, random_text, rouge1_brute, rougeL_brute, write_jsonl


def _f1(p, r):
    return float(2 * Fraction(p) * Fraction(r) / (Fraction(p) + Fraction(r)))


class TestRouge1:
    def test_identical(self):
        s = rouge1("the cat sat", "the cat sat")
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_hand_counted_fixture(self):
        # cand "the cat sat" vs ref "the cat": clipped overlap 2
        s = rouge1("the cat sat", "the cat")
        assert s.precision == pytest.approx(2 / 3, abs=1e-15)
        assert s.recall == 1.0
        assert s.f1 == pytest.approx(0.8, abs=1e-15)

    def test_disjoint(self):
        s = rouge1("alpha beta", "gamma delta")
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    def test_empty_reference_zero_with_warning(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="kpsum.metrics"):
            s = rouge1("something", "")
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)
        assert any("empty reference" in r.message for r in caplog.records)

    def test_clipping(self):
        # "cat cat cat" vs "cat": overlap clipped to 1
        s = rouge1("cat cat cat", "cat")
        assert s.precision == pytest.approx(1 / 3)
        assert s.recall == 1.0

    def test_tokenization_lowercase_no_punct(self):
        assert rouge_tokens("The CAT, sat!") == ["the", "cat", "sat"]
        assert rouge1("The Cat.", "the cat").f1 == 1.0


class TestRougeL:
    def test_identical(self):
        s = rougeL("a b c", "a b c")
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_hand_counted_fixture(self):
        # cand "a b c d" vs ref "a c": token LCS = 2
        s = rougeL("a b c d", "a c")
        assert s.precision == 0.5
        assert s.recall == 1.0
        assert s.f1 == pytest.approx(_f1(Fraction(1, 2), 1), abs=1e-15)

    def test_empty_candidate(self):
        s = rougeL("", "a b")
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    def test_order_sensitivity(self):
        # same unigrams, different order: rouge1 perfect, rougeL not
        r1 = rouge1("b a", "a b")
        rl = rougeL("b a", "a b")
        assert r1.f1 == 1.0
        assert rl.f1 < 1.0


class TestRougeVsBruteForce:
    def test_agreement_on_random_pairs(self):
        rng = SplitMix64(77)
        for _ in range(200):
            cand = random_text(rng, 1 + rng.randint(15))
            ref = random_text(rng, 1 + rng.randint(15))
            got1 = rouge1(cand, ref)
            exp1 = rouge1_brute(rouge_tokens(cand), rouge_tokens(ref))
            assert got1.precision == pytest.approx(exp1[0], abs=1e-12)
            assert got1.recall == pytest.approx(exp1[1], abs=1e-12)
            assert got1.f1 == pytest.approx(exp1[2], abs=1e-12)
            gotL = rougeL(cand, ref)
            expL = rougeL_brute(rouge_tokens(cand), rouge_tokens(ref))
            assert gotL.precision == pytest.approx(expL[0], abs=1e-12)
            assert gotL.recall == pytest.approx(expL[1], abs=1e-12)
            assert gotL.f1 == pytest.approx(expL[2], abs=1e-12)
            for s in (got1, gotL):
                assert 0.0 <= s.precision <= 1.0
                assert 0.0 <= s.recall <= 1.0
                assert s.f1 <= max(s.precision, s.recall) + 1e-15

    def test_swap_symmetry(self):
        rng = SplitMix64(42)
        for _ in range(50):
            a = random_text(rng, 8)
            b = random_text(rng, 8)
            for fn in (rouge1, rougeL):
                ab, ba = fn(a, b), fn(b, a)
                assert ab.precision == pytest.approx(ba.recall, abs=1e-15)
                assert ab.recall == pytest.approx(ba.precision, abs=1e-15)
                assert ab.f1 == pytest.approx(ba.f1, abs=1e-15)


def kset(*texts):
    return KeyphraseSet(
        phrases=tuple(
            Keyphrase(t, score=float(len(texts) - i), start=i) for i, t in enumerate(texts)
        ),
        k_requested=len(texts),
    )


class TestRecallAtK:
    def test_full_recall(self):
        r = recall_at_k(kset("alpha", "omega"), ["alpha", "omega"], k=5)
        assert r.recall == 1.0
        assert (r.matched, r.total) == (2, 2)

    def test_half_recall(self):
        r = recall_at_k(kset("alpha"), ["alpha", "omega"], k=1)
        assert r.recall == 0.5

    def test_fuzzy_match_counts(self):
        assert fuzz_oracle("quarterly revenue", "quarterly revenues") >= 0.7
        r = recall_at_k(kset("quarterly revenue"), ["quarterly revenues"], k=1)
        assert r.recall == 1.0

    def test_k_limits_predictions(self):
        r = recall_at_k(kset("miss", "alpha"), ["alpha"], k=1)
        assert r.recall == 0.0
        r2 = recall_at_k(kset("miss", "alpha"), ["alpha"], k=2)
        assert r2.recall == 1.0

    def test_empty_oracle_convention(self):
        r = recall_at_k(kset("alpha"), [], k=5)
        assert r.flagged
        assert r.recall == 1.0
        assert (r.matched, r.total) == (0, 0)

    def test_monotone_in_k(self):
        rng = SplitMix64(88)
        for _ in range(40):
            predicted = kset(*(random_text(rng, 2) for _ in range(6)))
            oracle = [random_text(rng, 2) for _ in range(4)]
            values = [recall_at_k(predicted, oracle, k).recall for k in range(1, 8)]
            assert values == sorted(values)

    def test_bruteforce_agreement(self):
        rng = SplitMix64(99)
        cfg = MatchConfig(0.7)
        for _ in range(60):
            predicted = kset(*(random_text(rng, 1 + rng.randint(2)) for _ in range(5)))
            oracle = [random_text(rng, 1 + rng.randint(2)) for _ in range(4)]
            k = 1 + rng.randint(5)
            got = recall_at_k(predicted, oracle, k, cfg)
            top = [p.text for p in predicted.phrases[:k]]
            matched = 0
            for o in oracle:
                if any(fuzz_oracle(p, o) >= cfg.epsilon for p in top):
                    matched += 1
            assert got.matched == matched


class TestEvaluateRun:
    def _dataset(self):
        return Dataset(
            (
                DocumentPair("d1", "src one", "the cat"),
                DocumentPair("d2", "src two", "a c"),
            )
        )

    def test_perfect_run_all_ones(self, tmp_path):
        ds = self._dataset()
        run = write_jsonl(
            tmp_path / "run.jsonl",
            [{"id": d.id, "summary": d.summary} for d in ds],
        )
        report = evaluate_run(run, ds)
        assert report.n == 2
        assert report.r1 == RougeScore(1.0, 1.0, 1.0)
        assert report.rl == RougeScore(1.0, 1.0, 1.0)

    def test_hand_computed_two_doc_fixture(self, tmp_path):
        ds = self._dataset()
        run = write_jsonl(
            tmp_path / "run.jsonl",
            [
                {"id": "d1", "summary": "the cat sat"},
                {"id": "d2", "summary": "a b c d"},
            ],
        )
        report = evaluate_run(run, ds)
        exp_r1_p = (2 / 3 + 2 / 4) / 2
        exp_r1_f = (0.8 + _f1(Fraction(1, 2), 1)) / 2
        assert report.r1.precision == pytest.approx(exp_r1_p, abs=1e-9)
        assert report.r1.recall == pytest.approx(1.0, abs=1e-9)
        assert report.r1.f1 == pytest.approx(exp_r1_f, abs=1e-9)
        assert report.mean_len_words == pytest.approx(3.5)

    def test_unknown_id_listed(self, tmp_path):
        ds = self._dataset()
        run = write_jsonl(tmp_path / "run.jsonl", [{"id": "ghost", "summary": "x"}])
        with pytest.raises(EvaluationError, match="ghost"):
            evaluate_run(run, ds)

    def test_report_json_round_trip(self, tmp_path):
        ds = self._dataset()
        run = write_jsonl(
            tmp_path / "run.jsonl",
            [
                {"id": "d1", "summary": "the cat sat"},
                {"id": "d2", "summary": "a b c d"},
            ],
        )
        report = evaluate_run(run, ds)
        data = json.loads(report.to_json())
        assert data["r1"]["p"] == report.r1.precision
        assert data["rl"]["f"] == report.rl.f1
        assert data["mean_len_words"] == report.mean_len_words

    def test_recall_section(self, tmp_path):
        ds = self._dataset()
        run = write_jsonl(tmp_path / "run.jsonl", [{"id": "d1", "summary": "the cat"}])
        kp = write_jsonl(
            tmp_path / "kp.jsonl", [{"id": "d1", "keyphrases": ["cat door", "tree"]}]
        )
        oracle = write_jsonl(tmp_path / "or.jsonl", [{"id": "d1", "keyphrases": ["cat door"]}])
        report = evaluate_run(run, ds, keyphrases_path=kp, oracle_path=oracle, k_list=(1, 2))
        assert report.recall[1].recall == 1.0
        assert report.recall[2].recall == 1.0
        data = report.to_json_dict()
        assert set(data["recall_at_k"]) == {"1", "2"}

    def test_recall_only_mode_flagged(self, tmp_path):
        ds = self._dataset()
        kp = write_jsonl(tmp_path / "kp.jsonl", [{"id": "d1", "keyphrases": ["cat"]}])
        oracle = write_jsonl(tmp_path / "or.jsonl", [{"id": "d1", "keyphrases": ["cat"]}])
        report = evaluate_run(None, ds, keyphrases_path=kp, oracle_path=oracle, k_list=(1,))
        assert "no-run-output" in report.flags
        assert report.recall[1].recall == 1.0
        assert report.n == 0

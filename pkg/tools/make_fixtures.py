#!/usr/bin/env python3
"""Regenerate the committed datasets and test fixtures.

Everything here is deterministic: running it twice produces identical bytes.
The mock5 fixture is built so selection dynamics are exactly predictable:

* 50 train questions in 5 clusters of 10 (q01-q10 -> c1, ..., q41-q50 -> c5).
* While a question's cluster is NOT covered by any exemplar in the prompt,
  the scripted model answers with t distinct values spread over l=10 samples
  (balanced counts, so both disagreement and entropy rank questions by t).
* Once covered, every sample returns the gold answer (t=1, zero entropy).
* Uncovered t values: q01..q05 get 10,9,8,7,6 (cluster c1 dominates the
  zero-exemplar ranking, so one-shot top-k stays inside c1), q06..q10 get 5,
  and each later cluster has a single peak: q11=5, q21=4, q31=3, q41=2.
  Everything else is 1. After round r covers a cluster, the next peak is the
  unique argmax, so adaptive selection walks q01, q11, q21, q31, q41 and
  covers all five clusters.
* Test questions (two per cluster) answer gold unanimously when covered and
  vote 2:1 for a wrong answer when uncovered, so evaluation accuracy equals
  the fraction of test questions whose cluster the exemplar set covers.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]

ANSWER_TEMPLATE = "Let me work through it. The answer is {value}."
COVERED_TEMPLATE = "This matches a worked example. The answer is {value}."


def dump_json(path: Path, obj: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def dump_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    path.write_text(lines, encoding="utf-8")


def balanced_counts(total: int, buckets: int) -> list[int]:
    """Split `total` into `buckets` counts as evenly as possible, larger first."""
    base, extra = divmod(total, buckets)
    return [base + 1] * extra + [base] * (buckets - extra)


def scripted_responses(values: list[str], counts: list[int], template: str) -> list[str]:
    out = []
    for value, count in zip(values, counts):
        out.extend([template.format(value=value)] * count)
    return out


# ---------------------------------------------------------------------------
# mock5: the 5-cluster selection-dynamics dataset


def mock5_uncovered_t(i: int) -> int:
    if i <= 5:
        return 11 - i  # 10, 9, 8, 7, 6
    if i <= 10:
        return 5
    if i in (11, 21, 31, 41):
        return {11: 5, 21: 4, 31: 3, 41: 2}[i]
    return 1


def make_mock5() -> None:
    samples_l = 10
    train_rows = []
    questions = {}
    rules = {}
    for i in range(1, 51):
        qid = f"q{i:02d}"
        text = f"What is {i} + {i}?"
        gold = str(2 * i)
        cluster = f"c{(i - 1) // 10 + 1}"
        train_rows.append({"id": qid, "question": text, "kind": "numeric", "answer": gold})
        questions[qid] = {"text": text, "cluster": cluster}
        t = mock5_uncovered_t(i)
        values = [gold] + [str(1000 * i + j) for j in range(1, t)]
        rules[qid] = {
            "uncovered": scripted_responses(values, balanced_counts(samples_l, t), ANSWER_TEMPLATE),
            "covered": [COVERED_TEMPLATE.format(value=gold)],
        }

    test_rows = []
    for j in range(1, 11):
        qid = f"t{j:02d}"
        text = f"What is {j} times 3?"
        gold = str(3 * j)
        cluster = f"c{(j - 1) // 2 + 1}"
        test_rows.append({"id": qid, "question": text, "kind": "numeric", "answer": gold})
        questions[qid] = {"text": text, "cluster": cluster}
        wrong = str(9000 + j)
        rules[qid] = {
            # Cycle length 3: each 6-vote evaluation run sees wrong 4x, gold 2x.
            "uncovered": [
                ANSWER_TEMPLATE.format(value=wrong),
                ANSWER_TEMPLATE.format(value=wrong),
                ANSWER_TEMPLATE.format(value=gold),
            ],
            "covered": [COVERED_TEMPLATE.format(value=gold)],
        }

    dump_jsonl(REPO / "datasets" / "mock5" / "train.jsonl", train_rows)
    dump_jsonl(REPO / "datasets" / "mock5" / "test.jsonl", test_rows)
    dump_json(
        REPO / "datasets" / "mock5.json",
        {
            "version": 1,
            "name": "mock5",
            "task_kind": "numeric",
            "train_path": "mock5/train.jsonl",
            "test_path": "mock5/test.jsonl",
            "preset_k": 5,
        },
    )
    dump_json(
        REPO / "tests" / "fixtures" / "mock5_backend.json",
        {
            "version": 1,
            "identity": "scripted-mock:mock5",
            "default_response": "I cannot tell.",
            "questions": questions,
            "rules": rules,
        },
    )


# ---------------------------------------------------------------------------
# redundancy: two same-cluster questions plus one off-cluster question


def make_redundancy() -> None:
    samples_l = 10
    spec = [
        # (id, text, gold, cluster, uncovered distinct count)
        ("qa", "How many people live on Earth, in billions?", "8", "pop", 10),
        ("qb", "What is the population of Earth, in billions?", "8", "pop", 9),
        ("qc", "How many continents are there?", "7", "geo", 5),
    ]
    train_rows = []
    questions = {}
    rules = {}
    for qid, text, gold, cluster, t in spec:
        train_rows.append({"id": qid, "question": text, "kind": "numeric", "answer": gold})
        questions[qid] = {"text": text, "cluster": cluster}
        values = [gold] + [str(100 + 10 * len(questions) + j) for j in range(1, t)]
        rules[qid] = {
            "uncovered": scripted_responses(values, balanced_counts(samples_l, t), ANSWER_TEMPLATE),
            "covered": [COVERED_TEMPLATE.format(value=gold)],
        }
    test_rows = [
        {"id": "td1", "question": "Roughly how many billions of humans exist?", "kind": "numeric", "answer": "8"},
        {"id": "td2", "question": "Count the continents on a globe.", "kind": "numeric", "answer": "7"},
    ]
    for row, cluster in zip(test_rows, ("pop", "geo")):
        qid = row["id"]
        gold = row["answer"]
        questions[qid] = {"text": row["question"], "cluster": cluster}
        rules[qid] = {
            "uncovered": [ANSWER_TEMPLATE.format(value="0")],
            "covered": [COVERED_TEMPLATE.format(value=gold)],
        }
    fixtures = REPO / "tests" / "fixtures"
    dump_jsonl(fixtures / "datasets" / "redundancy" / "train.jsonl", train_rows)
    dump_jsonl(fixtures / "datasets" / "redundancy" / "test.jsonl", test_rows)
    dump_json(
        fixtures / "datasets" / "redundancy.json",
        {
            "version": 1,
            "name": "redundancy",
            "task_kind": "numeric",
            "train_path": "redundancy/train.jsonl",
            "test_path": "redundancy/test.jsonl",
            "preset_k": 2,
        },
    )
    dump_json(
        fixtures / "redundancy_backend.json",
        {
            "version": 1,
            "identity": "scripted-mock:redundancy",
            "default_response": "I cannot tell.",
            "questions": questions,
            "rules": rules,
        },
    )


# ---------------------------------------------------------------------------
# geometry: nine 2D unit vectors in three tight blobs for clustering tests


def make_geometry() -> None:
    angles = [0, 5, 10, 85, 90, 95, 175, 180, 185]
    train_rows = []
    vectors = {}
    questions = {}
    rules = {}
    for i, angle in enumerate(angles, start=1):
        qid = f"g{i:02d}"
        text = f"Geometry probe {i:02d} at {angle} degrees."
        gold = str(i)
        radians = math.radians(angle)
        train_rows.append({"id": qid, "question": text, "kind": "numeric", "answer": gold})
        vectors[text] = [round(math.cos(radians), 12), round(math.sin(radians), 12)]
        questions[qid] = {"text": text, "cluster": f"blob{(i - 1) // 3 + 1}"}
        rules[qid] = {
            "uncovered": [f"Thinking in angles. The answer is {gold}."],
            "covered": [f"Thinking in angles. The answer is {gold}."],
        }
    test_rows = [
        {"id": "gt1", "question": "Which way is up?", "kind": "numeric", "answer": "90"}
    ]
    questions["gt1"] = {"text": "Which way is up?", "cluster": "blob2"}
    rules["gt1"] = {
        "uncovered": ["The answer is 90."],
        "covered": ["The answer is 90."],
    }
    fixtures = REPO / "tests" / "fixtures"
    dump_jsonl(fixtures / "datasets" / "geometry" / "train.jsonl", train_rows)
    dump_jsonl(fixtures / "datasets" / "geometry" / "test.jsonl", test_rows)
    dump_json(
        fixtures / "datasets" / "geometry.json",
        {
            "version": 1,
            "name": "geometry",
            "task_kind": "numeric",
            "train_path": "geometry/train.jsonl",
            "test_path": "geometry/test.jsonl",
            "preset_k": 3,
        },
    )
    dump_json(
        fixtures / "geometry_embedder.json",
        {"version": 1, "identity": "scripted-embedder:geometry", "dim": 2, "vectors": vectors},
    )
    dump_json(
        fixtures / "geometry_backend.json",
        {
            "version": 1,
            "identity": "scripted-mock:geometry",
            "default_response": "I cannot tell.",
            "questions": questions,
            "rules": rules,
        },
    )


# ---------------------------------------------------------------------------
# mini20: a small real-arithmetic dataset for the optional live smoke test


MINI20_TRAIN = [
    ("m01", "A box holds 12 eggs. How many eggs are in 3 boxes?", "36"),
    ("m02", "Tom had 15 marbles and lost 6. How many are left?", "9"),
    ("m03", "A book costs $8. What do 4 books cost, in dollars?", "32"),
    ("m04", "There are 7 rows of 5 chairs. How many chairs in total?", "35"),
    ("m05", "Mia read 24 pages on Monday and 18 on Tuesday. How many pages overall?", "42"),
    ("m06", "A rope of 20 meters is cut into 4 equal pieces. How long is each piece, in meters?", "5"),
    ("m07", "Sam saves $6 a week. How much does he save in 5 weeks, in dollars?", "30"),
    ("m08", "A train travels 60 km per hour. How far does it go in 2 hours, in km?", "120"),
    ("m09", "Nine apples are shared equally among 3 children. How many apples each?", "3"),
    ("m10", "A farmer has 14 cows and buys 8 more. How many cows now?", "22"),
    ("m11", "Lucy had 30 stickers and gave away 12. How many remain?", "18"),
    ("m12", "Each pizza has 8 slices. How many slices are in 6 pizzas?", "48"),
    ("m13", "A tank holds 50 liters and 19 are used. How many liters are left?", "31"),
    ("m14", "Three friends split $27 equally. How many dollars does each get?", "9"),
    ("m15", "A shelf holds 16 books per row over 4 rows. How many books fit?", "64"),
    ("m16", "Ben walks 2 km each day. How far does he walk in a week, in km?", "14"),
    ("m17", "A bag of 45 candies is split into 5 equal piles. How many per pile?", "9"),
    ("m18", "Ana is 11 and her brother is 4 years older. How old is he?", "15"),
    ("m19", "A cinema has 25 seats per row and 8 rows. How many seats in all?", "200"),
    ("m20", "From 100 subtract 37. What is the result?", "63"),
]

MINI20_TEST = [
    ("n01", "Six boxes hold 10 pens each. How many pens in total?", "60"),
    ("n02", "Kim had 21 coins and spent 9. How many coins are left?", "12"),
    ("n03", "What is 13 plus 28?", "41"),
    ("n04", "A ribbon of 36 cm is cut into 6 equal parts. How long is each part, in cm?", "6"),
    ("n05", "Four tickets cost $11 each. What is the total cost, in dollars?", "44"),
]


def make_mini20() -> None:
    train_rows = [
        {"id": qid, "question": text, "kind": "numeric", "answer": gold}
        for qid, text, gold in MINI20_TRAIN
    ]
    test_rows = [
        {"id": qid, "question": text, "kind": "numeric", "answer": gold}
        for qid, text, gold in MINI20_TEST
    ]
    dump_jsonl(REPO / "datasets" / "mini20" / "train.jsonl", train_rows)
    dump_jsonl(REPO / "datasets" / "mini20" / "test.jsonl", test_rows)
    dump_json(
        REPO / "datasets" / "mini20.json",
        {
            "version": 1,
            "name": "mini20",
            "task_kind": "numeric",
            "train_path": "mini20/train.jsonl",
            "test_path": "mini20/test.jsonl",
            "preset_k": 2,
        },
    )


# ---------------------------------------------------------------------------
# parser corpus: hand-derived expectations for the answer extractor


def parser_case(kind, raw, expected_canonical, expected_valid, choices=None):
    return {
        "raw": raw,
        "kind": kind,
        "choices": choices,
        "expected_canonical": expected_canonical,
        "expected_valid": expected_valid,
    }


RGB = ["red", "green", "blue"]
FIVE = ["v", "w", "x", "y", "z"]

PARSER_CASES = [
    # numeric, anchored
    parser_case("numeric", "The answer is 42.", "42", True),
    parser_case("numeric", "So the answer is $1,234.50 in total.", "1234.5", True),
    parser_case("numeric", "the answer is 1,000,000 dollars", "1000000", True),
    parser_case("numeric", "The answer is -3.", "-3", True),
    parser_case("numeric", "The answer is +17", "17", True),
    parser_case("numeric", "The answer is 85%.", "85", True),
    parser_case("numeric", "The answer is .5", "0.5", True),
    parser_case("numeric", "The answer is 0.50", "0.5", True),
    parser_case("numeric", "The answer is 12.0", "12", True),
    parser_case("numeric", "The answer is 0", "0", True),
    parser_case("numeric", "The answer is -0", "0", True),
    parser_case("numeric", "First I get 10, then 20. The answer is 30.", "30", True),
    parser_case("numeric", "THE ANSWER IS 7", "7", True),
    parser_case("numeric", "The answer is 5. The answer is 9.", "9", True),
    parser_case("numeric", "The answer is unclear.", "", False),
    # numeric, fallback to the last value in the text
    parser_case("numeric", "I compute 3 then 7 and finally 12", "12", True),
    parser_case("numeric", "Costs $2,500 overall", "2500", True),
    parser_case("numeric", "Probability is 60% roughly", "60", True),
    parser_case("numeric", "No digits here at all.", "", False),
    parser_case("numeric", "", "", False),
    # multiple choice
    parser_case("multiple_choice", "The answer is (B).", "B", True, RGB),
    parser_case("multiple_choice", "The answer is B.", "B", True, RGB),
    parser_case("multiple_choice", "The answer is c.", "C", True, RGB),
    parser_case("multiple_choice", "the answer is (a)", "A", True, RGB),
    parser_case("multiple_choice", "I pick (C) since it fits. The answer is (A).", "A", True, RGB),
    parser_case("multiple_choice", "Among (A) and (B), (B) wins", "B", True, RGB),
    parser_case("multiple_choice", "Definitely option C here", "C", True, RGB),
    parser_case("multiple_choice", "The answer is (E).", "E", True, FIVE),
    parser_case("multiple_choice", "The answer is (D).", "", False, RGB),
    parser_case("multiple_choice", "The answer is b obviously.", "", False, RGB),
    parser_case("multiple_choice", "Nothing chosen.", "", False, RGB),
    # boolean
    parser_case("boolean", "The answer is yes.", "yes", True),
    parser_case("boolean", "The answer is No", "no", True),
    parser_case("boolean", "The answer is TRUE.", "yes", True),
    parser_case("boolean", "The answer is False.", "no", True),
    parser_case("boolean", "It must be true", "yes", True),
    parser_case("boolean", "Yes and no and yes again", "yes", True),
    parser_case("boolean", "Clearly false. The answer is maybe.", "", False),
    parser_case("boolean", "Totally unclear", "", False),
    # string concatenation
    parser_case("string_concat", 'The answer is "ab".', "ab", True),
    parser_case("string_concat", "The answer is yolo", "yolo", True),
    parser_case("string_concat", "The answer is NKLM.", "nklm", True),
    parser_case("string_concat", 'The answer is "eoa"!', "eoa", True),
    parser_case("string_concat", "letters n, k give nk", "nk", True),
    parser_case("string_concat", "12345", "", False),
    parser_case("string_concat", "The answer is 123.", "", False),
]


def make_parser_corpus() -> None:
    dump_jsonl(REPO / "tests" / "fixtures" / "parser_corpus.jsonl", PARSER_CASES)


def main() -> None:
    make_mock5()
    make_redundancy()
    make_geometry()
    make_mini20()
    make_parser_corpus()
    print(f"fixtures regenerated under {REPO}")


if __name__ == "__main__":
    main()

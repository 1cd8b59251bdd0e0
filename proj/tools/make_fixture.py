#!/usr/bin/env python3
"""Writes the shipped test fixture: 20 synthetic agreements, 5 questions, planted answers.

Text is plain ASCII with single spaces and blank-line paragraph breaks, so it is already in
normalized form and Python string offsets equal code-point offsets.
"""

import argparse
import json
import pathlib
import random

FILLER = (
    "party parties agreement provision chapter article annex schedule committee review "
    "implementation cooperation consultation notification transparency procedure measure "
    "obligation territory entry force amendment withdrawal accession depositary language "
    "signature ratification secretariat meeting decision report period year member"
).split()
GLUE = "the of and to in shall such any with by for on".split()

QUESTIONS = [
    ("q1", "Does the agreement regulate phytosanitary inspections of imported fruit?",
     "Sanitary and phytosanitary rules cover inspections of imported fruit.",
     "Each party shall permit phytosanitary inspections of imported fruit at the border post."),
    ("q2", "Does the agreement cap tariff quotas on dairy cheese?",
     "Tariff quotas may limit dairy cheese volumes.",
     "Tariff quotas on dairy cheese shall not exceed the annual volume listed in the dairy annex."),
    ("q3", "Are investor state arbitration tribunals established?",
     "Investor claims can go to arbitration tribunals.",
     "An investor may submit a claim to an arbitration tribunal composed of three arbitrators."),
    ("q4", "Does the agreement protect geographical indications for wine?",
     "Geographical indications identify wine origins.",
     "The parties shall protect geographical indications for wine and spirits listed in the register."),
    ("q5", "Are government procurement thresholds for construction services set?",
     "Procurement thresholds apply to construction contracts.",
     "Government procurement of construction services above the threshold shall be open to suppliers."),
]


def filler_sentence(rng):
    words = []
    for i in range(rng.randint(8, 18)):
        words.append(rng.choice(FILLER) if rng.random() < 0.65 else rng.choice(GLUE))
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def filler_paragraph(rng):
    return " ".join(filler_sentence(rng) for _ in range(rng.randint(2, 4)))


def build(seed):
    rng = random.Random(seed)
    documents = []
    annotations = []
    for d in range(20):
        doc_id = f"agreement-{d + 1:02d}"
        paragraphs = [filler_paragraph(rng) for _ in range(rng.randint(45, 60))]
        planted = {}
        for q_index, (question_id, _, _, answer) in enumerate(QUESTIONS):
            # Every question is answered in 8 documents, staggered so each document answers 2.
            if (d + q_index * 4) % 20 < 8:
                slot = rng.randint(1, len(paragraphs) - 1)
                paragraph = paragraphs[slot]
                paragraphs[slot] = paragraph + " " + answer
                planted[question_id] = (slot, answer)
        text = "\n\n".join(paragraphs)
        documents.append({"kind": "doc", "doc_id": doc_id, "title": f"Agreement {d + 1}", "text": text})
        for question_id, _, _, _ in QUESTIONS:
            if question_id in planted:
                slot, answer = planted[question_id]
                paragraph_start = sum(len(p) + 2 for p in paragraphs[:slot])
                start = paragraph_start + paragraphs[slot].index(answer)
                assert text[start:start + len(answer)] == answer
                annotations.append({"question_id": question_id, "doc_id": doc_id, "label": 1,
                                    "answer_spans": [{"start": start, "end": start + len(answer)}]})
            else:
                annotations.append({"question_id": question_id, "doc_id": doc_id, "label": 0, "answer_spans": []})
    questions = [{"kind": "question", "question_id": q, "text": text, "explanation": expl}
                 for q, text, expl, _ in QUESTIONS]
    return documents + questions, annotations


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()
    records, annotations = build(args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    with open(args.out_dir / "annotations.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for a in annotations:
            f.write(json.dumps(a, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
# Copyright 2026 The Flipset Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Generates the bundled mini sentiment corpus deterministically.

Short templated movie reviews whose sentiment words are drawn with a
label-dependent bias, so a bag-of-words model reaches roughly 85% test
accuracy with a small vocabulary.
"""

import argparse
import hashlib
import json
import pathlib
import random

POSITIVE = """brilliant moving delightful superb charming gripping witty stunning
heartfelt clever beautiful fresh memorable touching fun engaging rich
warm inventive lovely powerful joyful smart tender""".split()
NEGATIVE = """dull boring clumsy tedious bland messy forgettable shallow awkward
predictable lifeless weak silly flat painful tired confusing hollow
sloppy stale lazy cheap grating bloated dreary""".split()
SUBJECTS = ["film", "movie", "plot", "script", "cast", "lead", "ending", "dialogue",
            "soundtrack", "pacing", "director", "story", "camera work", "second act",
            "villain", "humor"]
VERBS = ["is", "was", "felt", "seemed", "came across as", "turned out"]
INTENS = ["", "", "really", "very", "quite", "oddly", "mostly", "truly"]
FILLER = """i watched it on a rainy sunday. my friends saw it twice. it runs about
two hours. the theater was half empty. it is based on a novel. there is a
long chase near the end. the trailer gave away a lot. it opened last
week.""".replace("\n", " ").split(". ")


def sentence(rng, positive):
    subject = rng.choice(SUBJECTS)
    words = POSITIVE if positive else NEGATIVE
    adverb = rng.choice(INTENS)
    adj = rng.choice(words)
    parts = ["the", subject, rng.choice(VERBS)] + ([adverb] if adverb else []) + [adj]
    return " ".join(parts)


def review(rng, label):
    # Each sentiment sentence agrees with the label with probability 0.8.
    n = rng.randint(2, 4)
    sentences = [sentence(rng, (rng.random() < 0.8) == (label == 1)) for _ in range(n)]
    if rng.random() < 0.5:
        sentences.insert(rng.randint(0, len(sentences)), rng.choice(FILLER).strip(". "))
    text = ". ".join(sentences) + "."
    return text[0].upper() + text[1:]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/mini_sentiment")
    parser.add_argument("--seed", type=int, default=20260101)
    parser.add_argument("--n-train", type=int, default=2000)
    parser.add_argument("--n-test", type=int, default=400)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    rows = []
    for split, n in (("train", args.n_train), ("test", args.n_test)):
        labels = [i % 2 for i in range(n)]
        rng.shuffle(labels)
        rows += [{"text": review(rng, y), "label": y, "split": split} for y in labels]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    body = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    (out / "corpus.jsonl").write_text(body)
    manifest = {
        "name": "mini_sentiment",
        "format": "jsonl",
        "file": "corpus.jsonl",
        "seed": args.seed,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "sha256": hashlib.sha256(body.encode()).hexdigest(),
        "generator": "tools/make_mini_corpus.py",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Build data/lexicon/embeddings.txt from the curated word lists.

The vectors are synthetic: every lemma gets a component shared with its
word class and semantic categories, one shared component per association
pair it takes part in, and isotropic noise. Cosine similarity therefore
tracks category membership and association strength.

Usage: build_embeddings.py [LEXICON_DIR] [--check]
  --check  print the role-matched similarity percentile over random
           plausible pairs instead of writing the file.
"""
import sys
from pathlib import Path

import numpy as np

DIM = 64
SEED = 20220501
W_CLASS = 1.0
W_CATEGORY = 1.0
W_ASSOC = 2.2
W_NOISE = 0.75


def read_rows(path):
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        yield line.split("\t")


def annotations(cols):
    out = {}
    for col in cols:
        key, _, value = col.partition("=")
        out[key] = value
    return out


def load(lexdir):
    words = {}  # lemma -> (class, [categories])
    for cols in read_rows(lexdir / "nouns.tsv"):
        ann = annotations(cols[2:])
        words[cols[0]] = ("noun", ann["categories"].split(";"))
    for cols in read_rows(lexdir / "verbs.tsv"):
        ann = annotations(cols[2:])
        cats = []
        for role in ("agent", "patient", "recipient"):
            cats += [f"{role}:{c}" for c in ann.get(role, "").split(";") if c]
        words[cols[0]] = (f"verb:{cols[1]}", cats)
    for cols in read_rows(lexdir / "adjectives.tsv"):
        ann = annotations(cols[2:])
        words[cols[0]] = ("adjective", ann["compatible"].split(";"))
    assoc = {}
    for cols in read_rows(lexdir / "associations.tsv"):
        a, b, s = cols[0], cols[1], float(cols[2])
        if s <= 0:
            continue
        key = tuple(sorted((a, b)))
        assoc[key] = max(assoc.get(key, 0.0), s)
    return words, assoc


def unit(rng):
    v = rng.standard_normal(DIM)
    return v / np.linalg.norm(v)


def build(words, assoc):
    rng = np.random.default_rng(SEED)
    anchors = {}

    def anchor(name):
        if name not in anchors:
            anchors[name] = unit(rng)
        return anchors[name]

    vecs = {}
    for lemma in sorted(words):
        cls, cats = words[lemma]
        v = W_CLASS * anchor("class:" + cls)
        if cats:
            v = v + W_CATEGORY * sum(anchor("cat:" + c) for c in cats) / np.sqrt(len(cats))
        v = v + W_NOISE * unit(rng)
        vecs[lemma] = v
    for (a, b), s in sorted(assoc.items()):
        if a in vecs and b in vecs:
            shared = unit(rng) * W_ASSOC * (0.6 + s)
            vecs[a] = vecs[a] + shared
            vecs[b] = vecs[b] + shared
    return vecs


def cos(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def check(lexdir, words, vecs, assoc):
    """Approximate the role-matched similarity distribution of a core corpus."""
    rng = np.random.default_rng(1)
    assoc_set = set(assoc)
    verbs = {}
    for cols in read_rows(lexdir / "verbs.tsv"):
        if cols[1] == "intransitive_padding":
            continue
        ann = annotations(cols[2:])
        verbs[cols[0]] = (cols[1], {r: set(ann.get(r, "").split(";")) - {""} for r in ("agent", "patient", "recipient")})
    nouns = [w for w, (c, cats) in words.items() if c == "noun"]
    noun_cats = {w: set(words[w][1]) for w in nouns}
    names = sorted(verbs)
    sims = []
    for _ in range(20000):
        v1, v2 = rng.choice(names, 2, replace=False)
        if verbs[v1][0] != verbs[v2][0] or tuple(sorted((v1, v2))) in assoc_set:
            continue
        sims.append(cos(vecs[v1], vecs[v2]))
        for role in ("agent", "patient", "recipient"):
            c1, c2 = verbs[v1][1][role], verbs[v2][1][role]
            if not c1:
                continue
            p1 = [n for n in nouns if noun_cats[n] & c1]
            p2 = [n for n in nouns if noun_cats[n] & c2]
            n1, n2 = rng.choice(p1), rng.choice(p2)
            if n1 == n2 or tuple(sorted((n1, n2))) in assoc_set:
                continue
            sims.append(cos(vecs[n1], vecs[n2]))
    sims = np.sort(sims)
    p90 = sims[int(np.ceil(0.9 * len(sims))) - 1]
    pair_sims = [cos(vecs[a], vecs[b]) for a, b in assoc if a in vecs and b in vecs]
    above = np.mean([s >= p90 for s in pair_sims])
    print(f"role-matched samples={len(sims)} mean={np.mean(sims):.3f} p90={p90:.3f}")
    print(f"associated pairs={len(pair_sims)} mean={np.mean(pair_sims):.3f} share>=p90={above:.2f}")


def main():
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    lexdir = Path(args[0]) if args else Path(__file__).resolve().parent.parent / "lexicon"
    words, assoc = load(lexdir)
    vecs = build(words, assoc)
    if "--check" in sys.argv:
        check(lexdir, words, vecs, assoc)
        return
    with open(lexdir / "embeddings.txt", "w", encoding="utf-8") as f:
        f.write(f"{len(vecs)} {DIM}\n")
        for lemma in sorted(vecs):
            f.write(lemma + " " + " ".join(f"{x:.6f}" for x in vecs[lemma]) + "\n")


if __name__ == "__main__":
    main()

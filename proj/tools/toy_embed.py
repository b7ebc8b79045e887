#!/usr/bin/env python3
"""Deterministic hashing embedder for the sample fixtures.

Produces JVEC files that the C++ engine reads. It is a stand-in for a real
sentence encoder: texts sharing words and word pairs get high cosine scores,
identical texts score 1.0.

    toy_embed.py sentences  SENTENCES.jsonl OUT.jvec     ids "<ad_id>#<idx>"
    toy_embed.py statements STATEMENTS.jsonl OUT.jvec SETS.json
    toy_embed.py titles     REFERENCE.csv OUT.jvec       ids "<onet>|<normalized>"
    toy_embed.py queries    CORPUS.jsonl OUT.jvec        ids ad_id, normalized ad title
"""

import argparse
import csv
import hashlib
import json
import re
import struct
import sys

import numpy as np

DIM = 128


def tokens(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def embed(text, dim=DIM):
    v = np.zeros(dim, dtype=np.float64)
    toks = tokens(text)
    feats = [(t, 1.0) for t in toks] + [(a + "_" + b, 0.5) for a, b in zip(toks, toks[1:])]
    for f, w in feats:
        h = hashlib.blake2b(f.encode(), digest_size=8).digest()
        idx = int.from_bytes(h[:4], "little") % dim
        sign = 1.0 if h[4] & 1 else -1.0
        v[idx] += sign * w
    n = np.linalg.norm(v)
    if n == 0:
        v[0] = 1.0
        n = 1.0
    return (v / n).astype("<f4")


def write_jvec(path, ids, rows):
    with open(path, "wb") as f:
        f.write(b"JVEC")
        f.write(struct.pack("<III", 1, len(ids), DIM))
        for r in rows:
            f.write(r.tobytes())
        for i in ids:
            b = i.encode()
            f.write(struct.pack("<H", len(b)))
            f.write(b)


def normalize_title(t):
    t = re.sub(r"\([^)]*\)|\[[^\]]*\]|\{[^}]*\}", " ", t)
    t = t.replace("'", "").replace("’", "")
    t = re.sub(r"[^0-9A-Za-z]+", " ", t).lower()
    return " ".join(t.split())


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def main(argv):
    p = argparse.ArgumentParser()
    p.add_argument("kind", choices=["sentences", "statements", "titles", "queries"])
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("sets", nargs="?")
    a = p.parse_args(argv)

    ids, rows = [], []
    if a.kind == "sentences":
        for r in read_jsonl(a.input):
            ids.append(f"{r['ad_id']}#{r['sentence_idx']}")
            rows.append(embed(r["text"]))
    elif a.kind == "statements":
        if not a.sets:
            p.error("statements needs a SETS.json output path")
        sets = {}
        for r in read_jsonl(a.input):
            ids.append(r["member_id"])
            rows.append(embed(r["text"]))
            sets.setdefault(r["label_code"], []).append(r["member_id"])
        with open(a.sets, "w") as f:
            json.dump({k: sets[k] for k in sorted(sets)}, f, indent=2)
            f.write("\n")
    elif a.kind == "titles":
        seen = set()
        with open(a.input, newline="") as f:
            for r in csv.DictReader(f):
                key = f"{r['onet_code']}|{normalize_title(r['title'])}"
                if key in seen:
                    continue
                seen.add(key)
                ids.append(key)
                rows.append(embed(normalize_title(r["title"])))
    else:
        for r in read_jsonl(a.input):
            ids.append(r["id"])
            rows.append(embed(normalize_title(r["title"])))
    write_jvec(a.output, ids, rows)


if __name__ == "__main__":
    main(sys.argv[1:])

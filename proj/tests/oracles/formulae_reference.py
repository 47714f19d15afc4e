#!/usr/bin/env python3
"""Per-sentence readability scores computed independently of the C++ code.
Regenerates tests/golden/formulae_reference.tsv:

    python3 tests/oracles/formulae_reference.py data/sample/corpus.jsonl \
        data/hkps_coefficients.txt > tests/golden/formulae_reference.tsv
"""
import json
import sys

from sample_stats import syllables, words


def coefficients(path):
    k = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                key, value = line.split(None, 1)
                k[key] = value
    return {key: float(v) for key, v in k.items() if key != "version"}


def scores(sentence, k):
    ws = words(sentence)
    n = len(ws)
    syl = [syllables(w) for w in ws]
    poly = sum(s >= 3 for s in syl)
    mono = sum(s == 1 for s in syl)
    long_ = sum(len(w) > 6 for w in ws)
    chars = sum(len(w) for w in ws)
    fre = 180 - n - 58.5 * sum(syl) / n
    wstf = (0.1935 * 100 * poly / n + 0.1672 * n + 0.1297 * 100 * long_ / n
            - 0.0327 * 100 * mono / n - 0.875)
    lix = n + 100 * long_ / n
    raw = (k["intercept"] + k["asl"] * n + k["word_length"] * chars / n
           + k["long_pct"] * 100 * long_ / n + k["poly_prop"] * poly / n)
    hkps = min(max(raw, k["clamp_min"]), k["clamp_max"])
    return fre, hkps, poly / n, wstf, lix


def main(corpus, coeff_path):
    k = coefficients(coeff_path)
    print("id\tfre\thkps\tpoly_prop\twstf1\tlix")
    with open(corpus, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                r = json.loads(line)
                vals = scores(r["target"], k)
                print(r["id"] + "\t" + "\t".join(repr(v) for v in vals))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])

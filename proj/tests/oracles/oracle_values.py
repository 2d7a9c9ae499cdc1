#!/usr/bin/env python3
"""Independent reference computations for frozen test values.

Run directly; prints the values hard-coded in the C++ tests. Shares no code
with the library: tokenization, BM25 and CrystalBLEU are re-derived here.
"""
import math
import re
from collections import Counter


def tokenize(text):
    return [t for t in re.split(r"[^A-Za-z0-9_]+", text.lower()) if t]


def bm25_scores(docs, query, k1=1.5, b=0.75):
    toks = [tokenize(d) for d in docs]
    n = len(toks)
    avgdl = sum(len(t) for t in toks) / n
    out = []
    for t in toks:
        s = 0.0
        for q in tokenize(query):
            df = sum(1 for d in toks if q in d)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            tf = t.count(q)
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(t) / avgdl))
        out.append(s)
    return out


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def crystal_bleu(cand, ref, corpus, k, max_n):
    pooled = Counter()
    for doc in corpus:
        t = tokenize(doc)
        for n in range(1, max_n + 1):
            pooled.update(ngrams(t, n))
    ranked = sorted(pooled.items(), key=lambda kv: (-kv[1], kv[0]))
    trivial = {g for g, _ in ranked[:k]}
    c, r = tokenize(cand), tokenize(ref)
    if not c or not r:
        return 0.0
    logs = []
    for n in range(1, max_n + 1):
        cc = Counter(g for g in ngrams(c, n) if g not in trivial)
        rc = Counter(g for g in ngrams(r, n) if g not in trivial)
        total = sum(cc.values())
        if total == 0:
            continue
        match = sum(min(v, rc[g]) for g, v in cc.items())
        if match == 0:
            return 0.0
        logs.append(math.log(match / total))
    if not logs:
        return 0.0
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(sum(logs) / len(logs))


TOY_CORPUS = [
    "int add(int a, int b) { return a + b; }",
    "int sub(int a, int b) { return a - b; }",
    "int mul(int x, int y) { return x * y; }",
    "void log_msg(char *m) { puts(m); }",
    "int neg(int v) { return -v; }",
]

if __name__ == "__main__":
    print("bm25 {a b, b c, c d} / c:", [repr(s) for s in bm25_scores(["a b", "b c", "c d"], "c")])
    cand, ref = "int total count", "int a b c"
    print("toy k=0 max_n=1:", repr(crystal_bleu(cand, ref, TOY_CORPUS, 0, 1)))
    print("toy k=1 max_n=1:", repr(crystal_bleu(cand, ref, TOY_CORPUS, 1, 1)))
    near_c = "int sum(int a, int b) { return a + b; }"
    near_r = "int add(int a, int b) { return a + b; }"
    for k in (0, 1, 3, 50):
        print(f"near k={k} max_n=4:", repr(crystal_bleu(near_c, near_r, TOY_CORPUS, k, 4)))
    print("top5 trivial:", sorted(Counter(g for d in TOY_CORPUS for n in range(1, 5) for g in ngrams(tokenize(d), n)).items(), key=lambda kv: (-kv[1], kv[0]))[:5])

#!/usr/bin/env python3
"""Regenerates the synthetic JSONL fixtures in this directory.

marker40.jsonl: 40 (query, vulnerable, secure) triples. Every vulnerable
version carries the VULN_MARKER token and no secure version does, so the
marker judge is exact. The vulnerable versions get 0-3 lines of unrelated
logging so that they are not uniformly closer to the query than the secure
version, which spreads the poisoning effect over m.

small6.jsonl: six instances for ingest checks; one is filtered (test name).
"""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent

VERBS = ["parse", "copy", "read", "write", "decode", "encode", "scan", "merge"]
NOUNS = ["header", "packet", "buffer", "config", "token"]
LANGS = ["C", "C++", "Java", "Python"]
CWES = ["CWE-787", "CWE-125", "CWE-476", "CWE-20"]
NOISE = [
    "log_debug(ctx, level, counter);",
    "stats_increment(metrics, slot, weight);",
    "trace_event(session, timestamp, origin);",
]


def secure_code(verb, noun):
    return "\n".join([
        f"/* {verb.capitalize()} the {noun} from src into dst. */",
        f"int {verb}_{noun}(char *dst, const char *src, size_t len)",
        "{",
        f"    if (dst == NULL || src == NULL || len >= {noun.upper()}_MAX)",
        "        return -1;",
        f"    {verb}_{noun}_impl(dst, src, len);",
        "    return 0;",
        "}",
    ])


def vulnerable_code(verb, noun, noise):
    lines = [
        f"/* {verb.capitalize()} the {noun} from src into dst. */",
        f"int {verb}_{noun}(char *dst, const char *src, size_t len)",
        "{",
        "    /* VULN_MARKER: length is never checked */",
    ]
    lines += ["    " + n for n in NOISE[:noise]]
    lines += [f"    {verb}_{noun}_impl(dst, src, len);", "    return 0;", "}"]
    return "\n".join(lines)


def patch(verb, noun):
    return "\n".join([
        f"@@ -3,2 +3,4 @@ int {verb}_{noun}(char *dst, const char *src, size_t len)",
        "-    /* VULN_MARKER: length is never checked */",
        f"+    if (dst == NULL || src == NULL || len >= {noun.upper()}_MAX)",
        "+        return -1;",
    ])


def marker40():
    rows = []
    i = 0
    for verb in VERBS:
        for noun in NOUNS:
            rows.append({
                "id": f"m{i:02d}",
                "query": f"{verb} the {noun} from the source into the destination buffer",
                "vulnerable_code": vulnerable_code(verb, noun, i % 4),
                "secure_code": secure_code(verb, noun),
                "language": LANGS[i % 4],
                "cwe_ids": [CWES[(i // 4) % 4]],
                "patch": patch(verb, noun),
                "description": f"{verb}_{noun} copies attacker-controlled data without a length check.",
            })
            i += 1
    return rows


def small6():
    rows = []
    for i, (verb, noun) in enumerate([("parse", "header"), ("copy", "packet"), ("read", "buffer"),
                                      ("write", "config"), ("decode", "token")]):
        rows.append({
            "id": f"s{i}",
            "query": f"{verb} the {noun}",
            "vulnerable_code": vulnerable_code(verb, noun, 0),
            "secure_code": secure_code(verb, noun),
            "language": LANGS[i % 2],
            "cwe_ids": [CWES[i % 2]],
            "patch": "",
            "description": "",
        })
    rows.append({
        "id": "s5",
        "query": "run the unit tests",
        "vulnerable_code": "void runTests(void)\n{\n    run_all(); /* VULN_MARKER */\n}",
        "secure_code": "void runTests(void)\n{\n    run_all();\n}",
        "language": "C",
        "cwe_ids": [],
        "patch": "",
        "description": "",
    })
    return rows


def write(name, rows):
    with open(HERE / name, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    write("marker40.jsonl", marker40())
    write("small6.jsonl", small6())

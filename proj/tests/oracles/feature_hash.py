#!/usr/bin/env python3
"""Independent reference for the feature-hashing text encoder.

Re-implements tokenization, FNV-1a bucket hashing and L2 normalization from
their written definition (not from the C++ sources) and writes the golden
vectors and cosines that the C++ tests compare against.

    python3 tests/oracles/feature_hash.py > tests/golden/feature_hash.json
"""

import json
import math
import sys

DIM = 256
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def tokenize(text: str) -> list:
    tokens, cur = [], bytearray()
    for b in text.encode("utf-8"):
        if 65 <= b <= 90:
            b += 32
        if (97 <= b <= 122) or (48 <= b <= 57) or b >= 0x80:
            cur.append(b)
        elif cur:
            tokens.append(bytes(cur))
            cur = bytearray()
    if cur:
        tokens.append(bytes(cur))
    return tokens


def encode(text: str) -> list:
    tokens = tokenize(text)
    features = tokens + [a + b" " + b for a, b in zip(tokens, tokens[1:])]
    v = [0.0] * DIM
    for f in features:
        h = fnv1a64(f)
        v[h % DIM] += -1.0 if h >> 63 else 1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v] if norm > 0 else v


def cosine(a, b) -> float:
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b)) / (na * nb)))


def entity(t, name, desc):
    return f"type: {t} | name: {name} | desc: {desc}"


def mention(m, ctx):
    return f"mention: {m} | time: {ctx}"


def schema(s, r, o):
    return f"{s} -[{r}]-> {o}"


def triplet(src, rel, dst, start, end):
    return f"{src} {rel} {dst} from {start} to {end}"


VECTOR_TEXTS = [
    "",
    "   ",
    "Barack Obama",
    "the Senator",
    "Tom Hanks acted in Cast Away",
    "Zürich FC won in 2021",
    entity("Person", "Mara Quill", ""),
    mention("Oscar Awards", "in 2001"),
    schema("Person", "works as", "Job"),
]

PAIRS = {
    # alignment fixture: same type, overlapping descriptions
    "pixar_align": (
        entity("Organization", "Pixar Company", "computer animation studio"),
        entity("Organization", "Pixar Animation Studio", "American computer animation studio"),
    ),
    "oscar_mentions": (mention("Oscar Awards", "in 2001"), mention("Oscar Awards", "in 2015")),
    "oscar_2001_vs_2001_entity": (mention("Oscar Awards", "in 2001"), entity("Award", "Oscar Awards 2001", "")),
    "oscar_2001_vs_2015_entity": (mention("Oscar Awards", "in 2001"), entity("Award", "Oscar Awards 2015", "")),
    "employed_vs_works": (
        schema("Person", "employed as", "Organization"),
        schema("Person", "works as", "Organization"),
    ),
    "subgoal_vs_plays_for": ("Find the team Messi plays for", "plays for"),
    "subgoal_vs_born_in": ("Find the team Messi plays for", "born in"),
    "question_vs_triplet_2020": (
        "Which team did Lionel Messi play for in 2020?",
        triplet("Lionel Messi", "plays for", "Barcelona", "2020-01-01", "2020-12-31"),
    ),
    "question_vs_triplet_2021": (
        "Which team did Lionel Messi play for in 2020?",
        triplet("Lionel Messi", "plays for", "Barcelona", "2021-01-01", "2021-12-31"),
    ),
    "disjoint": ("alpha beta", "gamma delta"),
}


def sparse(v):
    return [[i, x] for i, x in enumerate(v) if x != 0.0]


def main():
    out = {
        "dimension": DIM,
        "fnv1a64": {s: format(fnv1a64(s.encode("utf-8")), "016x") for s in ["", "a", "foobar", "acted in"]},
        "tokens": {t: [x.decode("utf-8") for x in tokenize(t)] for t in VECTOR_TEXTS},
        "vectors": {t: sparse(encode(t)) for t in VECTOR_TEXTS},
        "cosines": {k: {"a": a, "b": b, "cosine": cosine(encode(a), encode(b))} for k, (a, b) in PAIRS.items()},
    }
    json.dump(out, sys.stdout, indent=1, sort_keys=True, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

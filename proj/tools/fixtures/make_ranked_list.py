#!/usr/bin/env python3
# Copyright 2026 The PrivMeasure Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic ranked-site fixture used by the matcher tests.

The list has the same shape as a top-sites ranking: the ten head sites, their
sibling entries scattered through the tail, two named sites at fixed ranks and
filler names that contain none of the basenames.
"""

import argparse
import random
import string

HEAD = [
    "google.com", "youtube.com", "facebook.com", "baidu.com", "wikipedia.org",
    "yahoo.com", "google.co.in", "reddit.com", "qq.com", "amazon.com",
]
FIXED = {342: "duckduckgo.com", 10244: "torproject.org"}
# Sibling set sizes, head entries included.
SIBLINGS = {
    "google": 212, "youtube": 7, "facebook": 11, "baidu": 8, "wikipedia": 12,
    "yahoo": 11, "reddit": 3, "qq": 3, "amazon": 21,
}
BASENAMES = list(SIBLINGS) + ["duckduckgo", "torproject"]
SUFFIXES = [
    "com", "net", "org", "de", "fr", "ru", "it", "es", "nl", "pl", "ca", "cn",
    "co.uk", "co.jp", "com.br", "com.au", "co.in", "com.mx", "com.tr", "be",
    "ch", "se", "at", "dk", "fi", "no", "cz", "hu", "ro", "gr", "pt", "ie",
    "com.ar", "co.za", "co.kr", "com.tw", "com.hk", "com.sg", "co.id", "ua",
]
WORDS = [
    "mail", "maps", "docs", "drive", "play", "cloud", "apis", "news", "store",
    "video", "photos", "analytics", "ads", "search", "translate", "books",
    "music", "kids", "go", "blog", "dev", "labs", "pay", "sync", "web", "tv",
]
TOTAL = 12000


def load_rules(path):
    rules = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("//"):
                rules.add(line.split()[0].lower())
    return rules


def allowed(name, rules):
    parent = name.split(".", 1)[1]
    return name not in rules and "*." + parent not in rules


def contains_basename(name, exclude=None):
    label = name.split(".", 1)[0]
    return any(b in label for b in BASENAMES if b != exclude)


def sibling_candidates(base, rng):
    out = [f"{base}.{s}" for s in SUFFIXES]
    for w in WORDS:
        for s in ("com", "net", "org", "io", "info"):
            out.append(f"{base}{w}.{s}")
            out.append(f"{w}{base}.{s}")
            out.append(f"{base}-{w}.{s}")
    rng.shuffle(out)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--psl", default="data/public_suffix_list.dat")
    ap.add_argument("--out", default="data/ranked_sites.csv")
    ap.add_argument("--seed", type=int, default=2018)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    rules = load_rules(args.psl)

    used = set(HEAD) | set(FIXED.values())
    extra = []
    for base, size in SIBLINGS.items():
        have = sum(1 for h in HEAD if h.split(".", 1)[0] == base)
        for name in sibling_candidates(base, rng):
            if have == size:
                break
            if name in used or contains_basename(name, exclude=base) or not allowed(name, rules):
                continue
            used.add(name)
            extra.append(name)
            have += 1
        assert have == size, (base, have)

    filler = []
    while len(filler) + len(extra) + len(HEAD) + len(FIXED) < TOTAL:
        label = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(4, 11)))
        name = f"{label}.{rng.choice(SUFFIXES[:12])}"
        if name in used or contains_basename(name) or not allowed(name, rules):
            continue
        used.add(name)
        filler.append(name)

    tail = extra + filler
    rng.shuffle(tail)
    ranked = {i + 1: h for i, h in enumerate(HEAD)}
    ranked.update(FIXED)
    it = iter(tail)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("rank,hostname\n")
        for rank in range(1, TOTAL + 1):
            name = ranked.get(rank) or next(it)
            f.write(f"{rank},{name}\n")


if __name__ == "__main__":
    main()

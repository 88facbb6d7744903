#!/usr/bin/env python3
"""Builds the PoS lexicon and lemma exception tables from a WordNet 3.0 dict dir.

usage: build_lexicon.py <wordnet-dict-dir> <assets-dir>

Outputs (key<TAB>value, '#' comments):
  pos_lexicon.tsv   word -> comma-separated base-form tags, tagger tag first
  exc_noun.tsv, exc_verb.tsv, exc_adj.tsv, exc_adv.tsv   inflection -> lemma
"""
import re
import sys
from collections import defaultdict
from pathlib import Path

WORD = re.compile(r"[a-z]+")
FILES = [("NOUN", "noun"), ("VERB", "verb"), ("ADJ", "adj"), ("ADV", "adv")]
ORDER = {"NOUN": 0, "VERB": 1, "ADJ": 2, "ADV": 3}
VERB_RULES = [("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"), ("ed", ""),
              ("ing", "e"), ("ing", ""), ("s", "")]


def read_index(src):
    words = defaultdict(dict)
    for tag, name in FILES:
        for line in open(src / f"index.{name}", encoding="utf-8"):
            if line.startswith("  "):
                continue
            p = line.split()
            if not WORD.fullmatch(p[0]):
                continue
            synsets, ptrs = int(p[2]), int(p[3])
            tagged = int(p[5 + ptrs])
            words[p[0]][tag] = (tagged, synsets)
    return words


def read_exc(src):
    exc = {}
    for tag, name in FILES:
        table = {}
        for line in open(src / f"{name}.exc", encoding="utf-8"):
            p = line.split()
            if len(p) < 2 or not WORD.fullmatch(p[0]) or not WORD.fullmatch(p[1]):
                continue
            if p[0] != p[1]:
                table.setdefault(p[0], p[1])
        # collapse chains so that no lemma is itself an exception key
        for key in list(table):
            seen = {key}
            val = table[key]
            while val in table and val not in seen:
                seen.add(val)
                val = table[val]
            if val in seen or val == key:
                del table[key]
            else:
                table[key] = val
        exc[tag] = table
    return exc


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    words = read_index(src)
    exc = read_exc(src)

    lexicon = {}
    for w, tags in words.items():
        keep = any(t > 0 for t, _ in tags.values()) or sum(s for _, s in tags.values()) >= 2
        if not keep:
            continue
        ranked = sorted(tags, key=lambda t: (-tags[t][0], -tags[t][1], ORDER[t]))
        lexicon[w] = ranked

    verb_base = {w for w, tags in lexicon.items() if "VERB" in tags}

    def verb_derivable(w):
        if exc["VERB"].get(w) in verb_base:
            return True
        return any(w.endswith(s) and w[: len(w) - len(s)] + r in verb_base
                   for s, r in VERB_RULES if s in ("ed", "ing"))

    # participial adjectives/adverbs fall through to the -ed/-ing suffix rule
    for w in [w for w, tags in lexicon.items()
              if w.endswith(("ed", "ing")) and tags[0] in ("ADJ", "ADV") and verb_derivable(w)]:
        del lexicon[w]

    for tag, table in exc.items():
        for lemma in table.values():
            tags = lexicon.setdefault(lemma, [])
            if tag not in tags:
                tags.append(tag)

    with open(out / "pos_lexicon.tsv", "w", encoding="utf-8") as f:
        f.write("# word<TAB>base-form tags (tagger tag first)\n")
        f.write("# generated by tools/build_lexicon.py from WordNet 3.0, see WORDNET_LICENSE\n")
        for w in sorted(lexicon):
            f.write(f"{w}\t{','.join(lexicon[w])}\n")
    for tag, name in FILES:
        with open(out / f"exc_{name}.tsv", "w", encoding="utf-8") as f:
            f.write(f"# {tag} inflection<TAB>lemma\n")
            f.write("# generated by tools/build_lexicon.py from WordNet 3.0, see WORDNET_LICENSE\n")
            for k in sorted(exc[tag]):
                f.write(f"{k}\t{exc[tag][k]}\n")
    print(f"lexicon: {len(lexicon)} entries; exceptions: "
          + ", ".join(f"{t}={len(exc[t])}" for t, _ in FILES))


if __name__ == "__main__":
    main()

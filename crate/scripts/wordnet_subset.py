#!/usr/bin/env python3
"""Cut a hypernym-closed subset out of WordNet's data.noun/index.noun.

    wordnet_subset.py DICT_DIR OUT_DIR lemma [lemma ...]

Every noun sense of each lemma is kept together with all of its hypernym
(@ and @i) ancestors. Data lines are copied verbatim; index lines are kept
for lemmas whose senses all survive. The license header is preserved.
"""
import os
import sys


def main():
    src, out, *lemmas = sys.argv[1:]
    header, data = [], {}
    with open(os.path.join(src, "data.noun"), encoding="utf-8") as f:
        for line in f:
            if line.startswith("  "):
                header.append(line)
            else:
                data[line.split(" ", 1)[0]] = line
    index_header, index = [], {}
    with open(os.path.join(src, "index.noun"), encoding="utf-8") as f:
        for line in f:
            if line.startswith("  "):
                index_header.append(line)
            else:
                index[line.split(" ", 1)[0]] = line

    def senses(entry):
        fields = entry.split()
        n, p = int(fields[2]), int(fields[3])
        return fields[4 + p + 2 : 4 + p + 2 + n]

    def hypernyms(line):
        fields = line.split(" | ")[0].split()
        w = int(fields[3], 16)
        pos = 4 + 2 * w
        p = int(fields[pos])
        pos += 1
        out = []
        for _ in range(p):
            sym, target, tpos = fields[pos : pos + 3]
            if sym in ("@", "@i") and tpos == "n":
                out.append(target)
            pos += 4
        return out

    keep, stack = set(), []
    for lemma in lemmas:
        key = lemma.lower().replace(" ", "_")
        if key not in index:
            sys.exit(f"unknown lemma: {lemma}")
        stack.extend(senses(index[key]))
    while stack:
        off = stack.pop()
        if off not in keep:
            keep.add(off)
            stack.extend(hypernyms(data[off]))

    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "data.noun"), "w", encoding="utf-8") as f:
        f.writelines(header)
        f.writelines(data[o] for o in sorted(keep))
    with open(os.path.join(out, "index.noun"), "w", encoding="utf-8") as f:
        f.writelines(index_header)
        f.writelines(l for k, l in sorted(index.items()) if all(s in keep for s in senses(l)))
    print(f"{len(keep)} synsets", file=sys.stderr)


if __name__ == "__main__":
    main()

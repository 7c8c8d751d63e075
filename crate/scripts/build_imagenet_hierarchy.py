"""Build the ImageNet-1K is-a tree from WordNet 3.0.

usage: build_imagenet_hierarchy.py <wordnet data.noun> <synsets.txt> <outdir>

synsets.txt lists the 1000 class wnids in class-index order. Each synset keeps
a single hypernym (class hypernyms before instance hypernyms, then file
order), so the result is a tree. Writes imagenet1k_is_a.txt and
imagenet1k_class_map.txt and prints the edge count, roots, class-pair
diameter and maximum depth.
"""
import sys


def read_hypernyms(path):
    hyper = {}
    with open(path, encoding="latin-1") as f:
        for line in f:
            if line.startswith("  "):
                continue
            parts = line.split("|")[0].split()
            off = parts[0]
            words = int(parts[3], 16)
            i = 4 + 2 * words
            pointers = int(parts[i])
            i += 1
            found = []
            for _ in range(pointers):
                sym, target, pos, _src = parts[i:i + 4]
                i += 4
                if sym in ("@", "@i") and pos == "n":
                    found.append((sym, target))
            found.sort(key=lambda t: t[0] != "@")
            hyper[off] = found[0][1] if found else None
    return hyper


def main():
    datanoun, synsets, outdir = sys.argv[1:4]
    hyper = read_hypernyms(datanoun)
    wnids = [l.strip() for l in open(synsets) if l.strip()]
    edges, parent = set(), {}
    for w in wnids:
        cur = w[1:]
        while hyper.get(cur):
            p = hyper[cur]
            edges.add(("n" + p, "n" + cur))
            parent["n" + cur] = "n" + p
            cur = p
    with open(outdir + "/imagenet1k_is_a.txt", "w") as f:
        for p, c in sorted(edges):
            f.write(f"{p} {c}\n")
    with open(outdir + "/imagenet1k_class_map.txt", "w") as f:
        for i, w in enumerate(wnids):
            f.write(f"{i} {w}\n")

    def chain(w):
        c = [w]
        while c[-1] in parent:
            c.append(parent[c[-1]])
        return c

    chains = [chain(w) for w in wnids]
    best = 0
    for i in range(len(wnids)):
        pos = {n: k for k, n in enumerate(chains[i])}
        for j in range(i + 1, len(wnids)):
            for k, n in enumerate(chains[j]):
                if n in pos:
                    best = max(best, k + pos[n])
                    break
    roots = {c[-1] for c in chains}
    depth = max(len(c) - 1 for c in chains)
    print(f"edges {len(edges)} roots {sorted(roots)} diameter {best} max_depth {depth}")


if __name__ == "__main__":
    main()

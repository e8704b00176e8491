"""Reference PMFGs and maximum spanning trees built with networkx.

Writes pmfg_oracle.json: for each graph, the upper-triangle weights in
row-major order, the PMFG edge set and the maximum spanning tree.
"""
import json
import random
from pathlib import Path

import networkx as nx


def pmfg(n, w):
    edges = sorted(w, key=lambda e: -w[e])
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i, j in edges:
        g.add_edge(i, j)
        if not nx.check_planarity(g)[0]:
            g.remove_edge(i, j)
        if g.number_of_edges() == 3 * (n - 2):
            break
    assert nx.check_planarity(g)[0]
    return sorted(tuple(sorted(e)) for e in g.edges())


def main():
    rng = random.Random(20240611)
    sizes = [3, 4, 5, 5, 6, 30] + [rng.randint(3, 30) for _ in range(44)]
    cases = []
    for n in sizes:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        ranks = list(range(1, len(pairs) + 1))
        rng.shuffle(ranks)
        # distinct dyadic weights in (0, 1), exact in binary
        w = {p: r / 1024 for p, r in zip(pairs, ranks)}
        g = nx.Graph()
        for (i, j), x in w.items():
            g.add_edge(i, j, weight=x)
        mst = sorted(tuple(sorted((a, b))) for a, b in nx.maximum_spanning_tree(g).edges())
        cases.append({
            "n": n,
            "weights": [w[p] for p in pairs],
            "pmfg_edges": pmfg(n, w),
            "max_spanning_tree": mst,
        })
    out = Path(__file__).with_name("pmfg_oracle.json")
    out.write_text(json.dumps(cases) + "\n")


if __name__ == "__main__":
    main()

"""Regenerate data/cases/ieee39 and data/cases/ieee39_scaled.

Branch reactances are the New England 39-bus values (PyPower case39).
Usage: python3 tools/make_ieee39.py data/cases
"""
import os
import sys

import numpy as np

BRANCHES = """1 2 .0411;1 39 .025;2 3 .0151;2 25 .0086;2 30 .0181;3 4 .0213;3 18 .0133;4 5 .0128;
4 14 .0129;5 6 .0026;5 8 .0112;6 7 .0092;6 11 .0082;6 31 .025;7 8 .0046;8 9 .0363;9 39 .025;
10 11 .0043;10 13 .0043;10 32 .02;12 11 .0435;12 13 .0435;13 14 .0101;14 15 .0217;15 16 .0094;
16 17 .0089;16 19 .0195;16 21 .0135;16 24 .0059;17 18 .0082;17 27 .0173;19 20 .0138;19 33 .0142;
20 34 .018;21 22 .014;22 23 .0096;22 35 .0143;23 24 .035;23 36 .0272;25 26 .0323;25 37 .0232;
26 27 .0147;26 28 .0474;26 29 .0625;28 29 .0151;29 38 .0156"""

# Generator inertia constants H (s) on buses 30..39.
INERTIA_H = {30: 42.0, 31: 30.3, 32: 35.8, 33: 28.6, 34: 26.0,
             35: 34.8, 36: 26.4, 37: 24.3, 38: 34.5, 39: 500.0}


def parse_branches():
    edges = []
    for item in BRANCHES.replace("\n", "").split(";"):
        a, b, x = item.split()
        edges.append((int(a), int(b), float(x)))
    assert len(edges) == 46
    return edges


def write_case(directory, nodes, edges):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "edges.csv"), "w") as f:
        f.write("from,to,susceptance\n")
        for a, b, s in sorted((min(a, b), max(a, b), s) for a, b, s in edges):
            f.write(f"{a},{b},{s!r}\n")
    with open(os.path.join(directory, "nodes.csv"), "w") as f:
        f.write("node,inertia,damping\n")
        for j, (m, d) in enumerate(nodes, 1):
            f.write(f"{j},{m!r},{d!r}\n")


def main(out):
    edges = parse_branches()
    physical = [(2 * INERTIA_H[j] / (2 * np.pi * 60), 1.0) if j in INERTIA_H else (0.01, 0.01)
                for j in range(1, 40)]
    write_case(os.path.join(out, "ieee39"), physical, [(a, b, round(1 / x, 6)) for a, b, x in edges])

    # Scaled: susceptance proportional to 1/x with largest Laplacian eigenvalue 1;
    # every node has M/ts^2 = 0.8 and D/ts = 1.5 at ts = 0.01.
    lap = np.zeros((39, 39))
    for a, b, x in edges:
        a -= 1
        b -= 1
        lap[a, b] -= 1 / x
        lap[b, a] -= 1 / x
        lap[a, a] += 1 / x
        lap[b, b] += 1 / x
    c = 1.0 / np.linalg.eigvalsh(lap).max()
    write_case(os.path.join(out, "ieee39_scaled"), [(0.8e-4, 0.015)] * 39,
               [(a, b, float("%.6g" % (c / x))) for a, b, x in edges])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/cases")

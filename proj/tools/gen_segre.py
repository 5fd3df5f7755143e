#!/usr/bin/env python3
"""Write the DSL file for torsion-free GL(2).GL(m) (Segre) structures.

Coframe: omega^a_j, psi^i_j, phi^a_b, eta^i_b with phi^m_m removed by the
trace relation psi^i_i + phi^a_a = 0.  Parameters F^a_{bcd} (symmetric,
trace-free) and G^i_{bcd} (symmetric) are the coordinates on A.
"""

import argparse
import itertools
import random
from fractions import Fraction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args()
    m = args.m
    if m < 3:
        ap.error("m must be at least 3")
    rng = random.Random(args.seed)
    A = range(1, m + 1)
    I = (1, 2)

    def om(a, j):
        return f"w{a}{j}"

    def ps(i, j):
        return f"p{i}{j}"

    def et(i, b):
        return f"h{i}{b}"

    trace = " + ".join([ps(i, i) for i in I] + [f"f{a}{a}" for a in A if a != m])

    def ph(a, b):
        return f"(-({trace}))" if a == b == m else f"f{a}{b}"

    def key(*idx):
        return "".join(str(x) for x in sorted(idx))

    def Fname(a, b, c, d):
        return f"F{a}_{key(b, c, d)}"

    def Gname(i, b, c, d):
        return f"G{i}_{key(b, c, d)}"

    triples = list(itertools.combinations_with_replacement(A, 3))
    Fparams = [f"F{a}_{key(*t)}" for a in A for t in triples]
    Gparams = [f"G{i}_{key(*t)}" for i in I for t in triples]

    coframe = [om(a, j) for a in A for j in I] + [ps(i, j) for i in I for j in I]
    coframe += [f"f{a}{b}" for a in A for b in A if not (a == b == m)]
    coframe += [et(i, b) for i in I for b in A]

    def wsum(terms):
        return " + ".join(terms) if terms else "0"

    def curvature(name):
        return [f"{name(c, d)}*{om(c, 1)}^{om(d, 2)}" for c in A for d in A]

    rules = []
    for a in A:
        for j in I:
            t = [f"-{ph(a, b)}^{om(b, j)}" for b in A] + [f"-{om(a, i)}^{ps(i, j)}" for i in I]
            rules.append((om(a, j), t))
    for i in I:
        for j in I:
            t = [f"-{ps(i, k)}^{ps(k, j)}" for k in I] + [f"-{et(i, b)}^{om(b, j)}" for b in A]
            rules.append((ps(i, j), t))
    for a in A:
        for b in A:
            if a == b == m:
                continue
            t = [f"-{ph(a, c)}^{ph(c, b)}" for c in A] + [f"-{om(a, i)}^{et(i, b)}" for i in I]
            t += curvature(lambda c, d: Fname(a, b, c, d))
            rules.append((f"f{a}{b}", t))
    for i in I:
        for b in A:
            t = [f"-{ps(i, j)}^{et(j, b)}" for j in I] + [f"-{et(i, a)}^{ph(a, b)}" for a in A]
            t += curvature(lambda c, d: Gname(i, b, c, d))
            rules.append((et(i, b), t))

    relations = []
    for c, d in itertools.combinations_with_replacement(A, 2):
        relations.append(" + ".join(Fname(a, a, c, d) for a in A) + " = 0")

    sample = {p: Fraction(rng.randint(-4, 4)) for p in Fparams + Gparams}
    for c, d in itertools.combinations_with_replacement(A, 2):
        sample[Fname(m, m, c, d)] = -sum(sample[Fname(a, a, c, d)] for a in A if a != m)

    out = []
    out.append(f"# Torsion-free GL(2).GL({m}) structures on R^{2 * m}: the prolonged")
    out.append("# Cartan-connection structure equations.  Generated by tools/gen_segre.py.")
    out.append(f"name segre{m};")
    out.append("mode type_a;")
    out.append("coframe " + " ".join(coframe) + ";")
    out.append("param " + " ".join(Fparams + Gparams) + ";")
    out.extend(f"relation {r};" for r in relations)
    out.append("")
    for lhs, t in rules:
        out.append(f"d {lhs} = " + wsum(t).replace("+ -", "- ") + ";")
    out.append("")
    out.append("sample { " + ", ".join(f"{k}: {v}" for k, v in sample.items()) + " };")
    text = "\n".join(out) + "\n"
    if args.output == "-":
        print(text, end="")
    else:
        with open(args.output, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()

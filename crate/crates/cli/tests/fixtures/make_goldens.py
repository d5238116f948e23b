#!/usr/bin/env python3
"""Regenerates the CLI fixtures and their goldens.

Everything here is computed independently of the Rust code: distances with
plain float64 loops, EF with exact fractions, rankings with explicit
(value, index) sort keys. Inputs are chosen so that every float64 operation
is exact or a single correctly rounded step, which makes the goldens
byte-comparable. Run from this directory: python3 make_goldens.py
"""

import math
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "NaN"
    return np.format_float_positional(float(x), unique=True, trim="-")


def opt(x):
    return "NA" if x is None else fmt(x)


def write_emb1(path, mode_tag, rows):
    rows = np.asarray(rows, dtype="<f4")
    n, dim = rows.shape
    header = b"EMB1" + struct.pack("<HHQII", 1, mode_tag, n, dim, 0)
    path.write_bytes(header + rows.tobytes())


def write_tsv(path, header, rows):
    lines = ["\t".join(header)] + ["\t".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def top_slice(fraction, n):
    x = Fraction(fraction) * n
    return max(1, min(n, math.ceil(x)))


def ef(order, active, fraction):
    n = len(active)
    a_total = sum(active)
    n_top = top_slice(fraction, n)
    hits = sum(active[i] for i in order[:n_top])
    return float(Fraction(hits * n, n_top * a_total))


def mean_sd(values):
    s = 0.0
    for v in values:
        s += v
    mean = s / len(values)
    if len(values) == 1:
        return mean, None
    ss = 0.0
    for v in values:
        ss += (v - mean) * (v - mean)
    return mean, math.sqrt(ss / (len(values) - 1))


def euclid(u, v):
    s = 0.0
    for a, b in zip(u, v):
        s += (float(a) - float(b)) ** 2
    return math.sqrt(s)


# ---------------------------------------------------------------- screen


def make_screen(rng):
    out = HERE / "screen"
    out.mkdir(exist_ok=True)
    fraction = "0.1"
    targets = ["t1", "t2"]
    rows = []  # (id, role, activity, target, emb, sims{refid: value})
    for t in targets:
        refs = [rng.integers(-3, 4, size=6) for _ in range(2)]
        ref_ids = [f"{t}_ref{j}" for j in range(2)]
        members = []
        for i in range(60):
            active = i % 10 == 3
            if active:
                base = refs[i % 2]
                emb = base + rng.integers(-1, 2, size=6)
            else:
                emb = rng.integers(-4, 5, size=6)
            sims = {}
            for j, rid in enumerate(ref_ids):
                hi = 96 if active else 80
                sims[rid] = float(rng.integers(0, hi)) / 64.0
            members.append((f"{t}_c{i:02d}", "CANDIDATE", "ACTIVE" if active else "INACTIVE", t, emb, sims))
        members.insert(0, (ref_ids[0], "REFERENCE", "", t, refs[0], {}))
        members.insert(31, (ref_ids[1], "REFERENCE", "", t, refs[1], {}))
        rows.extend(members)

    sim_cols = [f"rocs@{t}_ref{j}" for t in targets for j in range(2)]
    header = ["id", "role", "activity", "target"] + sim_cols
    table = []
    for rid, role, act, t, emb, sims in rows:
        cells = [rid, role, act, t]
        for c in sim_cols:
            ref = c.split("@", 1)[1]
            cells.append(fmt(sims[ref]) if ref in sims else "")
        table.append(cells)
    write_tsv(out / "meta.tsv", header, table)
    write_emb1(out / "3d.emb1", 2, [r[4] for r in rows])

    report = ["target\tmethod\tn_refs\tmean_ef\tsd_ef\tbest_pooled_ef"]
    per_ref = ["target\tmethod\treference\tef"]
    for t in targets:
        mine = [r for r in rows if r[3] == t]
        refs = [r for r in mine if r[1] == "REFERENCE"]
        cands = [r for r in mine if r[1] == "CANDIDATE"]
        active = [1 if c[2] == "ACTIVE" else 0 for c in cands]
        n = len(cands)

        dist = [[euclid(c[4], r[4]) for c in cands] for r in refs]
        per = [ef(sorted(range(n), key=lambda i: (d[i], i)), active, fraction) for d in dist]
        pooled = [min(d[i] for d in dist) for i in range(n)]
        best = ef(sorted(range(n), key=lambda i: (pooled[i], i)), active, fraction)
        mean, sd = mean_sd(per)
        report.append(f"{t}\tped-3d-euclidean\t{len(refs)}\t{fmt(mean)}\t{opt(sd)}\t{fmt(best)}")
        per_ref += [f"{t}\tped-3d-euclidean\t{r[0]}\t{fmt(e)}" for r, e in zip(refs, per)]

        sims = [[c[5][r[0]] for c in cands] for r in refs]
        per = [ef(sorted(range(n), key=lambda i: (-s[i], i)), active, fraction) for s in sims]
        pooled = [max(s[i] for s in sims) for i in range(n)]
        best = ef(sorted(range(n), key=lambda i: (-pooled[i], i)), active, fraction)
        mean, sd = mean_sd(per)
        report.append(f"{t}\tsim-rocs\t{len(refs)}\t{fmt(mean)}\t{opt(sd)}\t{fmt(best)}")
        per_ref += [f"{t}\tsim-rocs\t{r[0]}\t{fmt(e)}" for r, e in zip(refs, per)]

    (out / "report.golden.tsv").write_text("\n".join(report) + "\n")
    (out / "per_reference.golden.tsv").write_text("\n".join(per_ref) + "\n")


# ------------------------------------------------------------- correlate


def pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def make_correlate(rng):
    """32 candidates on one axis around a reference at the origin, so the PED
    is exactly the coordinate and an affine function of rocs_comb."""
    out = HERE / "correlate"
    out.mkdir(exist_ok=True)
    n = 32
    rocs = [float(rng.integers(0, 129)) / 128.0 for _ in range(n)]
    shape = [float(rng.integers(0, 65)) / 64.0 for _ in range(n)]
    ped = [2.0 - 2.0 * r for r in rocs]
    header = ["id", "role", "activity", "rocs_comb", "shape"]
    table = [["ref", "REFERENCE", "", "", ""]]
    emb = [[0.0, 0.0, 0.0]]
    for i in range(n):
        table.append([f"c{i:02d}", "CANDIDATE", "INACTIVE", fmt(rocs[i]), fmt(shape[i])])
        emb.append([ped[i], 0.0, 0.0])
    write_tsv(out / "meta.tsv", header, table)
    write_emb1(out / "3d.emb1", 2, emb)

    labels = ["ped:3d:euclidean:pooled", "col:rocs_comb", "col:shape"]
    cols = [ped, rocs, shape]
    lines = ["metric\t" + "\t".join(labels)]
    for i, li in enumerate(labels):
        cells = [fmt(1.0 if i == j else pearson(cols[i], cols[j])) for j in range(3)]
        lines.append(li + "\t" + "\t".join(cells))
    (out / "matrix.golden.tsv").write_text("\n".join(lines) + "\n")

    lo, hi, nb = 0.0, 2.0, 10
    edges = [lo + (hi - lo) * b / nb for b in range(nb)] + [hi]

    def bin_of(v):
        if not (lo <= v <= hi):
            return None
        for b in range(nb):
            if edges[b] <= v < edges[b + 1]:
                return b
        return nb - 1

    lines = ["metric\tbin_lo\tbin_hi\tcount\tmean\tsd"]
    for label, col in zip(labels[1:], cols[1:]):
        groups = [[] for _ in range(nb)]
        for d, v in zip(ped, col):
            b = bin_of(d)
            if b is not None:
                groups[b].append(v)
        for b, g in enumerate(groups):
            if g:
                mean, sd = mean_sd(g)
            else:
                mean, sd = None, None
            lines.append(f"{label}\t{fmt(edges[b])}\t{fmt(edges[b + 1])}\t{len(g)}\t{opt(mean)}\t{opt(sd)}")
    (out / "binned.golden.tsv").write_text("\n".join(lines) + "\n")


# -------------------------------------------------------------- genstats

RANGES = [
    ("mw", 200.0, 500.0),
    ("tpsa", 20.0, 130.0),
    ("logp", -1.0, 6.0),
    ("hbd", 0.0, 5.0),
    ("hba", 0.0, 10.0),
    ("qed", 0.4, 1.0),
    ("sa", 1.0, 5.0),
]


def make_genstats(rng):
    out = HERE / "genstats"
    out.mkdir(exist_ok=True)
    n, top_k, quantiles = 1000, 500, 4
    props = {
        "mw": lambda: round(float(rng.uniform(150, 600)), 2),
        "tpsa": lambda: round(float(rng.uniform(5, 160)), 1),
        "logp": lambda: round(float(rng.uniform(-2, 7)), 2),
        "hbd": lambda: float(rng.integers(0, 8)),
        "hba": lambda: float(rng.integers(0, 14)),
        "qed": lambda: round(float(rng.uniform(0.1, 0.95)), 3),
        "sa": lambda: round(float(rng.uniform(1, 7)), 2),
    }
    header = ["id", "role", "scaffold_key", "total_score"] + [c for c, _, _ in RANGES]
    table, recs = [], []
    for i in range(n):
        score = None if i % 97 == 5 else float(rng.integers(0, 257)) / 256.0
        key = f"SCAF{int(rng.zipf(1.6)) % 150:03d}"
        vals = {c: (None if rng.random() < 0.03 else f()) for c, f in props.items()}
        rid = f"g{i:04d}"
        table.append(
            [rid, "CANDIDATE", key, "" if score is None else fmt(score)]
            + ["" if vals[c] is None else fmt(vals[c]) for c, _, _ in RANGES]
        )
        recs.append((rid, key, score, vals))
    write_tsv(out / "meta.tsv", header, table)

    scored = [r for r in recs if r[2] is not None]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][2], i))[:top_k]
    top = [scored[i] for i in order]

    lines = ["quantile\tcount\tunique_scaffolds\tratio\tscore_min\tscore_max"]
    asc = sorted(range(len(top)), key=lambda p: (top[p][2], p))
    for b in range(quantiles):
        sl = asc[b * len(top) // quantiles : (b + 1) * len(top) // quantiles]
        uniq = len({top[p][1] for p in sl})
        ratio = uniq / len(sl) if sl else 0.0
        smin = top[sl[0]][2] if sl else None
        smax = top[sl[-1]][2] if sl else None
        lines.append(f"Q{b + 1}\t{len(sl)}\t{uniq}\t{fmt(ratio)}\t{opt(smin)}\t{opt(smax)}")
    (out / "quantiles.golden.tsv").write_text("\n".join(lines) + "\n")

    lines = ["set\tmolecules\tunique_scaffolds\tratio"]
    for name, rs in [("all", scored), ("top_k", top)]:
        u = len({r[1] for r in rs})
        lines.append(f"{name}\t{len(rs)}\t{u}\t{fmt(u / len(rs))}")
    (out / "scaffolds.golden.tsv").write_text("\n".join(lines) + "\n")

    comp = ["column\tconsidered\tinside\tfraction"]
    mm = ["column\tmin\tmax"]
    for c, lo, hi in RANGES:
        vals = [r[3][c] for r in top if r[3][c] is not None]
        inside = sum(1 for v in vals if lo <= v <= hi)
        comp.append(f"{c}\t{len(vals)}\t{inside}\t{fmt(inside / len(vals))}")
        mm.append(f"{c}\t{fmt(min(vals))}\t{fmt(max(vals))}")
    (out / "compliance.golden.tsv").write_text("\n".join(comp) + "\n")
    (out / "minmax.golden.tsv").write_text("\n".join(mm) + "\n")


def main():
    rng = np.random.default_rng(20240611)
    make_screen(rng)
    make_correlate(rng)
    make_genstats(rng)


if __name__ == "__main__":
    main()

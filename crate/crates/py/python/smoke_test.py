"""Smoke test for the vwsd extension module.

Build and install first:  pip install crates/py   (or: maturin develop -m crates/py/Cargo.toml)
Run:                      python crates/py/python/smoke_test.py
"""

import json
import math
import random

import vwsd

N = 20
DIM = 8


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def build():
    rng = random.Random(0)
    lines, gold = [], []
    store = vwsd.EmbeddingStore()
    store.add_space("clip", DIM)
    for i in range(1, N + 1):
        phrase = f"word{i} sense"
        cands = [f"img{i}_{c}.jpg" for c in range(10)]
        lines.append("\t".join([f"word{i}", phrase] + cands))
        g = i % 10
        gold.append(cands[g])
        axis = i % DIM
        query = [1.0 if k == axis else 0.0 for k in range(DIM)]
        store.insert("clip", "text", phrase, query)
        store.insert("clip", "text", f"ctx {i}", unit([rng.uniform(-1, 1) for _ in range(DIM)]))
        for c, key in enumerate(cands):
            if c == g:
                vec = query
            else:
                vec = [rng.uniform(-1, 1) for _ in range(DIM)]
                vec[axis] = 0.0
                vec = unit(vec)
            store.insert("clip", "image", key, vec)
    ds = vwsd.Dataset.parse("\n".join(lines) + "\n", "smoke", "\n".join(gold) + "\n")
    return ds, store


def main():
    ds, store = build()
    assert len(ds) == N and ds.is_labeled
    assert ds.ids[0] == "000001"
    assert ds.instance("000003")["gold"] == "img3_3.jpg"

    blob = store.to_bytes()
    assert blob[:4] == b"EMBS"
    again = vwsd.EmbeddingStore.from_bytes(blob)
    assert len(again) == len(store) == N * 12
    assert vwsd.EmbeddingStore.from_jsonl(store.to_jsonl()).to_bytes() == blob
    assert ("clip", "image", "img1_1.jpg") in store

    base = vwsd.score_system(ds, vwsd.SystemSpec("base", "clip"), store, jobs=2)
    m = vwsd.evaluate(base, ds)
    assert m["hit_rate"] == 100.0 and m["mrr"] == 100.0, m

    ctx_file = vwsd.AuxQueryFile.parse(
        "ctx", "text", "".join(f"{i:06d}\tctx {i}\n" for i in range(1, N + 1)), ds
    )
    ctx = vwsd.score_system(ds, vwsd.SystemSpec("ctx", "clip", "context", tag="ctx"), store, [ctx_file])
    assert ctx.kind == "cosine"

    ens = vwsd.ensemble([base, ctx], "base+ctx")
    assert ens.kind == "probability"
    assert abs(sum(ens.probs("000001")) - 1.0) < 1e-9

    c = vwsd.confusion(base, ctx, ds, sim_gap=True)
    assert sum(map(sum, c["counts"])) == N
    assert c["counts"][0][0] + c["counts"][0][1] == N

    gold_sim, all_sim = vwsd.mean_sim(base, ds)
    assert abs(gold_sim - 1.0) < 1e-6 and all_sim < gold_sim

    table = vwsd.ScoreTable.from_json(base.to_json())
    assert table.predictions == base.predictions
    assert json.loads(base.to_json())["system"] == "base"

    p = vwsd.softmax([1.0, 2.0, 3.0])
    assert abs(sum(p) - 1.0) < 1e-12

    try:
        vwsd.Dataset.parse("too\tfew\tfields\n")
    except vwsd.VwsdError as e:
        assert "field" in str(e)
    else:
        raise AssertionError("bad TSV accepted")

    print("vwsd smoke test: ok")


if __name__ == "__main__":
    main()

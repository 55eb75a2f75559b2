"""Smoke test for the Python bindings.

Builds the extension with cargo, loads it from a temporary directory and
exercises corpus loading, tree decoding, statistics, bundles and the probe.

    python3 python/smoke.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build(dest: Path) -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "gpprobe-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / ("libgpprobe_py.dylib" if sys.platform == "darwin" else "libgpprobe_py.so")
    shutil.copy(lib, dest / "gpprobe_py.so")
    sys.path.insert(0, str(dest))


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="gpprobe-smoke-"))
    build(tmp)
    import gpprobe_py as gp

    items = gp.load_corpus(ROOT / "data" / "sample.jsonl")
    assert len(items) == 8, items
    fig1 = items[0]
    assert fig1.roles == (3, 5, 11), fig1.roles
    absent, present = gp.render_variants(fig1)
    assert "hunted, the deer" in present and "hunted the deer" in absent, (absent, present)
    assert len(fig1.prefixes("comma_absent")) == 5

    d = [[0, 1, 4], [1, 0, 2], [4, 2, 0]]
    tree = gp.decode_mst(d)
    assert sorted(tree) == [(0, 1), (1, 2)], tree
    assert gp.tree_weight(d, tree) == 3.0
    assert gp.judge_attachment(3, [(0, 1), (1, 2)], 0, 1, 2) == "other"
    assert gp.judge_attachment(3, [(1, 2), (2, 0)], 0, 1, 2) == "correct"
    assert gp.uuas([(0, 1), (1, 2)], [(1, 0), (0, 2)]) == 0.5

    r = gp.paired_t([1, 1, 3], [0, 0, 0])
    assert abs(r.t - 2.5) < 1e-12 and r.df == 2
    assert abs(r.p - (1 - 2.5 / math.sqrt(2.5**2 + 2))) < 1e-9, r
    assert abs(gp.t_sf(2.5, 2) - r.p) < 1e-12
    w = gp.welch_t([0, 0, 1, 1], [1, 1, 1, 1])
    assert abs(w.df - 3) < 1e-9, w

    ws = dict(gp.write_synthetic_workspace(tmp / "ws", 4, 60))
    bundle = gp.read_bundle(Path(ws["bundle_root"]) / "item01" / "comma_absent" / "prefix_5")
    sens = bundle.head_sensitivity()
    assert len(sens) == bundle.n_layers and all(-1 <= v <= 1 for row in sens for v in row)

    # train on the bundles' own planted trees at the middle layer
    vectors, trees = [], []
    for b_dir in sorted(Path(ws["treebank_activations"]).iterdir()):
        b = gp.read_bundle(b_dir)
        vectors.append(b.word_vectors(2))
    sentences = Path(ws["treebank"]).read_text().strip().split("\n\n")
    for block in sentences:
        rows = [line.split("\t") for line in block.splitlines() if not line.startswith("#")]
        trees.append([(int(r[0]) - 1, int(r[2]) - 1) for r in rows if r[2] != "0"])
    probe, losses = gp.Probe.train(vectors, trees, layer=2, rank=16, lr=0.1, epochs=20, batch_size=5, seed=1)
    assert losses[-1] < losses[0], losses
    probe.save(tmp / "probe.bin")
    again = gp.Probe.load(tmp / "probe.bin")
    assert again.distance_matrix(vectors[0]) == probe.distance_matrix(vectors[0])
    score = sum(gp.uuas(probe.parse(v), t) for v, t in zip(vectors, trees)) / len(trees)
    assert score > 0.9, score
    edges, verdict = probe.snapshot(bundle, gp.load_corpus(ws["corpus"])[0])
    assert verdict in ("correct", "misinterpretation"), verdict

    print(f"ok: {len(items)} items, p={r.p:.4f}, probe UUAS {score:.3f}, verdict {verdict}")
    shutil.rmtree(tmp)


if __name__ == "__main__":
    main()

"""Grid over alpha and K for one expansion method on the synthetic collection.

    python3 scripts/alpha_sweep.py [--method pre|post|incremental] [--out table.tsv]

For a real collection call the CLI directly, e.g.

    embqe sweep --config exp.cfg --grid alpha=0:1:0.1 --grid K=10,25,50,100
"""

import argparse
import tempfile
from pathlib import Path

from embqe.cli import main
from embqe.synthetic import make_collection

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--method", default="pre", choices=["pre", "post", "incremental"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        paths = make_collection(seed=args.seed).write(tmp)
        index = Path(tmp) / "index.bin"
        main(["build-index", str(paths["corpus"]), str(index)])
        argv = [
            "sweep", "--index", str(index), "--topics", str(paths["topics"]),
            "--vectors", str(paths["vectors"]), "--qrels", str(paths["qrels"]),
            "--method", args.method, "--grid", "alpha=0:1:0.2", "--grid", "K=1,3,5,10",
        ]
        if args.out:
            argv += ["--out", args.out]
        raise SystemExit(main(argv))

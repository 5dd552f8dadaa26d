"""Run every search method on the synthetic collection and compare each to the LM baseline.

    python3 scripts/synthetic_demo.py [--workdir DIR] [--seed N]
"""

import argparse
import contextlib
import io
import tempfile
from pathlib import Path

from embqe.cli import main
from embqe.synthetic import make_collection

METHODS = {
    "none": [],
    "pre": ["--alpha", "0.6", "--K", "5"],
    "post": ["--alpha", "0.6", "--K", "5", "--fb-docs", "10"],
    "incremental": ["--alpha", "0.6", "--K", "5", "--l", "3"],
    "rm3": ["--K", "10", "--fb-docs", "5"],
}


def cli(*argv: str) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(list(argv))
    if code:
        raise SystemExit(f"embqe {' '.join(argv)} exited with {code}")
    return buf.getvalue()


def field(output: str, name: str) -> str:
    for line in output.splitlines():
        if line.startswith(name + "\t"):
            return line.split("\t")[1]
    raise KeyError(name)


def run(workdir: Path, seed: int) -> None:
    paths = make_collection(seed=seed).write(workdir)
    index = workdir / "index.bin"
    print(cli("build-index", str(paths["corpus"]), str(index)).strip())
    common = ["--index", str(index), "--topics", str(paths["topics"]), "--vectors", str(paths["vectors"])]

    runs = {}
    for method, extra in METHODS.items():
        runs[method] = workdir / f"{method}.run"
        cli("search", *common, "--method", method, *extra, "--run-tag", method, "--out", str(runs[method]),
            "--expansions", str(workdir / f"{method}.expansions.jsonl"))

    print(f"\n{'method':<12} {'MAP':>7} {'GMAP':>7} {'P@5':>7} {'diff':>8} {'p':>9}")
    for method, path in runs.items():
        ev = cli("evaluate", str(path), str(paths["qrels"]))
        diff = p = ""
        if method != "none":
            cmp = cli("compare", str(path), str(runs["none"]), str(paths["qrels"]),
                      "--csv", str(workdir / f"{method}_vs_none.csv"))
            diff, p = field(cmp, "mean_ap_diff"), field(cmp, "p")
        print(f"{method:<12} {field(ev, 'map'):>7} {field(ev, 'gmap'):>7} {field(ev, 'P@5'):>7} {diff:>8} {p:>9}")
    print(f"\nrun files, expansion logs and AP-difference CSVs are in {workdir}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--workdir", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.workdir:
        args.workdir.mkdir(parents=True, exist_ok=True)
        run(args.workdir, args.seed)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            run(Path(tmp), args.seed)

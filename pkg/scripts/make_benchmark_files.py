"""Materialise the bundled benchmark as files for the command-line tools.

Writes the labelled synthetic dataset, the frozen teacher checkpoint,
and a ready-to-run config, so the whole pipeline can be driven from the
``coss`` entry point without touching Python.
"""

import argparse
import pathlib

from coss.benchmark import benchmark_config, make_benchmark_dataset, make_benchmark_teacher
from coss.config import render_config
from coss.io import atomic_write, write_dataset, write_model


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir", default="benchmark_files", help="where to put the artifacts"
    )
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dataset = make_benchmark_dataset()
    write_dataset(out / "benchmark.cssd", dataset)
    print(f"wrote {out / 'benchmark.cssd'} ({dataset.n} samples, {dataset.dim}-D, labelled)")

    teacher = make_benchmark_teacher()
    write_model(out / "teacher.cssm", teacher)
    print(f"wrote {out / 'teacher.cssm'} ({teacher.input_dim} -> {teacher.output_dim})")

    cfg = benchmark_config()
    atomic_write(out / "quickstart.ini", render_config(cfg).encode("utf-8"))
    print(f"wrote {out / 'quickstart.ini'}")


if __name__ == "__main__":
    main()

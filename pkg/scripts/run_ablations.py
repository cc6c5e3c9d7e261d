"""Loss-component and space-weight grids on the bundled benchmark.

Each grid holds everything fixed except the swept setting and scores the
trained students by k-NN accuracy under the benchmark's fixed split.
"""

import argparse
import time

from coss.benchmark import (
    benchmark_config,
    make_benchmark_dataset,
    make_benchmark_teacher,
    model_accuracy,
)
from coss.distill import ablate_components, ablate_lambda
from coss.knn import build_index
from coss.models import forward


def print_rows(rows, key):
    header = f"{key:>8}  {'accuracy':>8}  {'final_l_co':>11}  {'final_l_ss':>11}  {'final_l_total':>13}"
    print(header)
    for row in rows:
        tag = row[key] if isinstance(row[key], str) else f"{row[key]:g}"
        print(
            f"{tag:>8}  {row['accuracy']:8.4f}  {row['final_l_co']:11.4f}  "
            f"{row['final_l_ss']:11.4f}  {row['final_l_total']:13.4f}"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--grid", default="both", choices=("components", "lambda", "both")
    )
    args = parser.parse_args()

    dataset = make_benchmark_dataset()
    teacher = make_benchmark_teacher()
    teacher_emb, _ = forward(teacher, dataset.inputs)
    index = build_index(teacher_emb, pool=16)
    cfg = benchmark_config(seed=args.seed)
    unlabeled = dataset.without_labels()

    def eval_fn(student):
        return model_accuracy(student, dataset)

    t0 = time.perf_counter()
    if args.grid in ("components", "both"):
        print("loss components (row term, column term, both):")
        print_rows(ablate_components(cfg, unlabeled, teacher, index, eval_fn), "variant")
        print()
    if args.grid in ("lambda", "both"):
        print("space-term weight sweep:")
        print_rows(ablate_lambda(cfg, unlabeled, teacher, index, eval_fn), "lambda")
    print(f"\ntotal {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()

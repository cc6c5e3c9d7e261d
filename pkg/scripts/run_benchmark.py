"""Distill a student on the bundled benchmark and report k-NN accuracy.

Prints the teacher's accuracy, each student run's accuracy and final
losses, and the student/teacher ratio the acceptance bound watches.
"""

import argparse
import time

import numpy as np

from coss.benchmark import (
    benchmark_config,
    make_benchmark_dataset,
    make_benchmark_teacher,
    model_accuracy,
)
from coss.distill import distill
from coss.knn import build_index
from coss.models import forward


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=1, help="number of seeds to run")
    parser.add_argument("--epochs", type=int, default=None, help="override epoch count")
    parser.add_argument("--lam", type=float, default=None, help="override the space-term weight")
    parser.add_argument("--variant", default=None, choices=("coss", "co_only", "ss_only", "bn"))
    args = parser.parse_args()

    dataset = make_benchmark_dataset()
    teacher = make_benchmark_teacher()
    teacher_emb, _ = forward(teacher, dataset.inputs)
    index = build_index(teacher_emb, pool=16)

    teacher_acc = model_accuracy(teacher, dataset)
    print(f"teacher knn accuracy: {teacher_acc:.4f}")

    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.lam is not None:
        overrides["lam"] = args.lam
    if args.variant is not None:
        overrides["loss_variant"] = args.variant

    accs = []
    for seed in range(args.seeds):
        cfg = benchmark_config(seed=seed, **overrides)
        t0 = time.perf_counter()
        student, log = distill(cfg, dataset.without_labels(), teacher, index)
        acc = model_accuracy(student, dataset)
        accs.append(acc)
        last = log.steps[-1]
        print(
            f"seed {seed}: accuracy {acc:.4f} (ratio {acc / teacher_acc:.3f})  "
            f"l_co {last.l_co:+.4f}  l_ss {last.l_ss:+.4f}  "
            f"[{time.perf_counter() - t0:.1f}s]"
        )
    if len(accs) > 1:
        print(f"mean over {len(accs)} seeds: {np.mean(accs):.4f} +/- {np.std(accs):.4f}")


if __name__ == "__main__":
    main()

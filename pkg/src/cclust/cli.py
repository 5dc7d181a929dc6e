"""Command-line front end.

Subcommands: cluster (self-labeled clustering), robustness (label-corruption
sweep), bench (EM vs PGD), mstep-check (Newton vs oracle verification),
measures (evaluate entropies and cross-entropies on given vectors). Exit
codes: 0 success, 1 runtime error, 2 configuration error. A JSON config file
may supply any long-flag value; explicit flags take precedence. All
randomness funnels through the --seed flag of each subcommand.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import measures
from .bench import BenchSpec, format_summary, header_lines, run_bench
from .data import Dataset, load_features_csv, make_gaussian_mixture, save_results
from .em import EmConfig
from .errors import CclustError
from .linear_model import COLLISION_CE, SHANNON_CE, TrainConfig, save_checkpoint
from .mstep import MStepInstance, newton_solve, objective as mstep_objective
from .pgd import mstep_grid_oracle, mstep_oracle
from .pipeline import (
    CCE_PGD,
    CCE_PLUS_EM,
    SCE_KL_PGD,
    PipelineConfig,
    robustness_experiment,
    self_label_train,
)
from .simplex import validate


class ConfigError(Exception):
    """User-facing configuration problem; exits with status 2."""


def _parse_vec(text):
    return validate(np.array([float(t) for t in text.split(",")]), repair=True)


def _parse_floats(text):
    return tuple(float(t) for t in text.split(","))


def _parse_ints(text):
    return tuple(int(t) for t in text.split(","))


def _parse_synthetic(spec):
    out = {"k": 4, "n": 2, "per_class": 250, "sep": 10.0, "seed": 0}
    for part in spec.split(","):
        if "=" not in part:
            raise ConfigError(f"--synthetic: expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        key = key.strip()
        if key not in out:
            raise ConfigError(f"--synthetic: unknown key {key!r}")
        out[key] = float(val) if key == "sep" else int(val)
    return out


def _merge_config(args, parser_defaults):
    """Fill unset flags from --config JSON; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"--config: {exc}") from exc
    for key, val in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"--config: unknown option {key!r}")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, val)
    return args


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------

def _cmd_cluster(args):
    if (args.features is None) == (args.synthetic is None):
        raise ConfigError("need exactly one of --features or --synthetic")
    if args.features:
        ds = load_features_csv(args.features)
        k = args.k or ds.K
        if not k:
            raise ConfigError("--k is required for unlabeled feature files")
    else:
        syn = _parse_synthetic(args.synthetic)
        syn.setdefault("seed", args.seed)
        ds = make_gaussian_mixture(K=syn["k"], N=syn["n"], per_class=syn["per_class"],
                                   separation=syn["sep"], seed=args.seed)
        k = args.k or syn["k"]

    variant = {"cce_plus": CCE_PLUS_EM, "cce": CCE_PGD, "sce_kl": SCE_KL_PGD}[args.variant]
    cfg = PipelineConfig(
        n_clusters=k,
        em=EmConfig(lam=args.lam),
        train=TrainConfig(learning_rate=args.lr, weight_decay=args.weight_decay,
                          batch_size=args.batch_size, epochs=1, seed=args.seed),
        epochs=args.epochs,
        pseudo_label_loss=variant,
    )
    model, Y, log = self_label_train(ds.X, cfg, true_labels=ds.labels)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.jsonl"), "w") as fh:
        for record in log:
            fh.write(json.dumps(record) + "\n")
    rows = [{**{f"y{j}": Y[i, j] for j in range(Y.shape[1])},
             "cluster": int(Y[i].argmax())} for i in range(Y.shape[0])]
    save_results(os.path.join(args.out, "labels.csv"), rows)
    save_checkpoint(model, os.path.join(args.out, "model.bin"))
    final = log[-1]
    acc = f" train_acc={final['train_acc']:.4f}" if final["train_acc"] is not None else ""
    print(f"wrote {args.out}: {len(log)} epochs, final loss={final['loss']:.6f}{acc}")


# ---------------------------------------------------------------------------
# robustness
# ---------------------------------------------------------------------------

def _cmd_robustness(args):
    losses = {"both": (COLLISION_CE, SHANNON_CE), "cce": (COLLISION_CE,),
              "sce": (SHANNON_CE,)}[args.loss]
    n_train = args.train_size
    per_class = (n_train + args.test_size + args.classes - 1) // args.classes
    ds = make_gaussian_mixture(K=args.classes, N=args.dim, per_class=per_class,
                               separation=args.separation, seed=args.seed)
    train = Dataset(X=ds.X[:n_train], labels=ds.labels[:n_train], K=args.classes)
    test = Dataset(X=ds.X[n_train:n_train + args.test_size],
                   labels=ds.labels[n_train:n_train + args.test_size], K=args.classes)
    cfg = TrainConfig(learning_rate=args.lr, weight_decay=args.weight_decay,
                      batch_size=args.batch_size, epochs=args.epochs)
    rows = robustness_experiment(train, test, _parse_floats(args.eta_grid),
                                 _parse_ints(args.seeds), cfg, losses=losses)
    short = {COLLISION_CE: "cce", SHANNON_CE: "sce"}
    out_rows = [{"eta": r["eta"], "loss": short[r["loss"]], "seed": r["seed"],
                 "test_acc": r["test_acc"]} for r in rows]
    save_results(args.out, out_rows, fieldnames=["eta", "loss", "seed", "test_acc"])
    print(f"wrote {args.out}: {len(out_rows)} rows")


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _cmd_bench(args):
    spec = BenchSpec(k_values=_parse_ints(args.k), m=args.m, lam=args.lam,
                     step_sizes=_parse_floats(args.etas), repetitions=args.reps,
                     seed=args.seed)
    rows = run_bench(spec)
    print(format_summary(spec, rows))
    if args.out:
        save_results(args.out, rows)
        print(f"wrote {args.out}: {len(rows)} rows "
              f"({'; '.join(h.lstrip('# ') for h in header_lines(spec))})")


# ---------------------------------------------------------------------------
# mstep-check
# ---------------------------------------------------------------------------

def random_mstep_batches(rng, K, count, groups=20):
    """Seeded verification instances, grouped by a shared fairness multiplier.

    Predictions are softmax rows of unit Gaussian logits; support weights are
    moderately concentrated Dirichlet draws scaled so each instance's weight
    total is 1/K. The barrier strength lam*W is sampled log-uniformly over
    [0.5, 200] (over [5, 200] for K >= 100, where weaker barriers leave the
    minimizer numerically unidentifiable to the tested precision when top
    predictions nearly tie).
    """
    from .simplex import softmax_rows
    lo = 5.0 if K >= 100 else 0.5
    batches = []
    sizes = [count // groups + (1 if g < count % groups else 0) for g in range(groups)]
    for size in sizes:
        if size == 0:
            continue
        sig = softmax_rows(rng.standard_normal((size, K)))
        wgt = rng.dirichlet(np.full(K, 4.0), size=size) / K
        lam = float(10.0 ** rng.uniform(np.log10(lo), np.log10(200.0))) * K
        batches.append((sig, wgt, lam))
    return batches


def _cmd_mstep_check(args):
    if args.instances < 1:
        raise ConfigError("--instances must be >= 1")
    rng = np.random.default_rng(args.seed)
    worst_gap = 0.0
    worst_err = 0.0
    for K in _parse_ints(args.k):
        for sig, wgt, lam in random_mstep_batches(rng, K, args.instances):
            y_oracles = mstep_oracle(sig, wgt, lam)
            for i in range(sig.shape[0]):
                inst = MStepInstance(sigma=sig[i], support_weights=wgt[i], lam=lam)
                y_newton = newton_solve(inst).y
                y_oracle = y_oracles[i]
                if K == 2:
                    y_grid = mstep_grid_oracle(sig[i], wgt[i], lam)
                    if mstep_objective(y_grid, inst) < mstep_objective(y_oracle, inst):
                        y_oracle = y_grid
                if args.selftest_perturb_oracle:
                    y_oracle = np.roll(y_oracle, 1)
                gap = mstep_objective(y_newton, inst) - mstep_objective(y_oracle, inst)
                worst_gap = max(worst_gap, gap)
                worst_err = max(worst_err, float(np.abs(y_newton - y_oracle).max()))
    ok = worst_gap <= 1e-8 and worst_err <= 1e-4
    print(f"mstep-check: instances={args.instances} k={args.k} "
          f"max_objective_gap={worst_gap:.3e} max_y_inf_error={worst_err:.3e} "
          f"{'OK' if ok else 'FAIL'}")
    if not ok:
        raise CclustError("Newton solution worse than oracle beyond tolerance")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

_MEASURE_OPS = {
    "shannon-entropy": ("p", lambda p, q, a: measures.shannon_entropy(p)),
    "shannon-ce": ("pq", lambda p, q, a: measures.shannon_cross_entropy(p, q)),
    "kl": ("pq", lambda p, q, a: measures.kl_divergence(p, q)),
    "renyi-entropy": ("pa", lambda p, q, a: measures.renyi_entropy(p, a)),
    "renyi-divergence": ("pqa", lambda p, q, a: measures.renyi_divergence(p, q, a)),
    "collision-entropy": ("p", lambda p, q, a: measures.collision_entropy(p)),
    "collision-ce": ("pq", lambda p, q, a: measures.collision_cross_entropy(p, q)),
    "cce-decomposition": ("pq", lambda p, q, a: measures.cce_decomposition(p, q)),
    "mi": ("batch", None),
}


def _cmd_measures(args):
    spec_, fn = _MEASURE_OPS[args.op]
    if spec_ == "batch":
        rows = [_parse_vec(part) for part in args.p.split(";")]
        print(measures.mi_loss_estimate(np.vstack(rows)))
        return
    p = _parse_vec(args.p)
    q = _parse_vec(args.q) if args.q else None
    if "q" in spec_ and q is None:
        raise ConfigError(f"--q is required for op {args.op!r}")
    if "a" in spec_ and args.alpha is None:
        raise ConfigError(f"--alpha is required for op {args.op!r}")
    result = fn(p, q, args.alpha)
    if isinstance(result, tuple):
        print(f"angular={result[0]} entropic={result[1]} total={result[0] + result[1]}")
    else:
        print(result)


# ---------------------------------------------------------------------------

_SUBPARSERS = {}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cclust",
        description="Self-labeled clustering with the collision cross-entropy loss.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="run the self-labeling clustering pipeline")
    p.add_argument("--features", help="CSV feature file (header f0..fN[,label])")
    p.add_argument("--synthetic", help="synthetic mixture spec, e.g. k=4,n=2,per_class=250,sep=10")
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0, help="fairness weight")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.1, help="SGD learning rate")
    p.add_argument("--weight-decay", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=250)
    p.add_argument("--variant", choices=["cce_plus", "cce", "sce_kl"], default="cce_plus",
                   help="pseudo-label loss/solver variant")
    p.add_argument("--out", required=True, help="output directory "
                   "(metrics.jsonl, labels.csv, model.bin)")
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("robustness", help="label-corruption robustness sweep (CSV out)")
    p.add_argument("--eta-grid", default="0,0.2,0.4,0.6,0.8", help="comma list of corruption rates")
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma list of seeds")
    p.add_argument("--loss", choices=["both", "cce", "sce"], default="both")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--train-size", type=int, default=5000)
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--weight-decay", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=250)
    p.add_argument("--seed", type=int, default=0, help="dataset seed")
    p.add_argument("--out", required=True, help="output CSV (eta,loss,seed,test_acc)")
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("bench", help="EM vs PGD timing benchmark")
    p.add_argument("--k", default="2,20,200", help="comma list of class counts")
    p.add_argument("--m", type=int, default=10000, help="batch size (points)")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--etas", default="0.1,1,5,20", help="PGD step-size grid")
    p.add_argument("--reps", type=int, default=3, help="timed repetitions (median)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional CSV output path")
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("mstep-check", help="verify Newton M-step against the PGD/grid oracle")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--k", default="2,5,20", help="comma list of class counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--selftest-perturb-oracle", action="store_true",
                   help="testing hook: corrupt the oracle to confirm the check trips")
    p.set_defaults(func=_cmd_mstep_check)

    p = sub.add_parser("measures", help="evaluate an entropy/cross-entropy on given vectors")
    p.add_argument("--op", choices=sorted(_MEASURE_OPS), required=True)
    p.add_argument("--p", required=True, help="comma-separated distribution "
                   "(semicolon-separated rows for --op mi)")
    p.add_argument("--q", help="second distribution where required")
    p.add_argument("--alpha", type=float, help="order for renyi ops")
    p.set_defaults(func=_cmd_measures)

    for name, subparser in sub.choices.items():
        _SUBPARSERS[name] = subparser
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {a.dest: a.default for a in _SUBPARSERS[args.command]._actions}
    try:
        args = _merge_config(args, defaults)
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CclustError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

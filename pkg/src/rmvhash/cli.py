"""Command-line front end.

Subcommands: synth, corrupt, train, encode, query, eval, inspect.

Every option can also come from a flat UTF-8 key=value config file passed
with --config; command-line flags win over config values. Config keys equal
the long option names with dashes replaced by underscores.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataset, evaluation, hash_trainer, kernel_sim, lowrank_alm, model_io


def _load_config(path):
    cfg = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (expected key=value): {line!r}")
        key, val = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _resolve(args, spec):
    """Merge flag values over config-file values over defaults."""
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, (cast, default) in spec.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in cfg:
            raw = cfg[key]
            out[key] = raw.lower() in ("1", "true", "yes") if cast is bool else cast(raw)
        else:
            out[key] = default
    return out


def _dims(text):
    return tuple(int(x) for x in str(text).split(","))


_TRAIN_SPEC = {
    "bits": (int, 32),
    "gamma": (float, 1e-4),
    "delta": (float, 1e-6),
    "alpha": (float, 0.1),
    "beta": (float, 1.0),
    "lam": (float, 1e-3),
    "outer_iters": (int, 60),
    "graph_l": (int, 300),
    "graph_k": (int, 3),
    "kernel_r": (int, 0),          # 0: same as graph_l
    "kernel_mode": (str, "kmeans"),
    "self_tuning_k": (int, 7),
    "alm_tol": (float, 1e-6),
    "alm_max_iters": (int, 300),
    "alm_rho": (float, 1.3),
    "constraint_mode": (str, "nonneg"),
    "shrink_mode": (str, "column-l21"),
    "oos_z": (int, 300),
    "k_oos": (int, 25),
    "seed": (int, 0),
    "no_recovery": (bool, False),
    "query_mode": (str, "concat"),
}


def _train_configs(p):
    hp = hash_trainer.HyperParams(
        P=p["bits"], gamma=p["gamma"], delta=p["delta"], alpha=p["alpha"],
        beta=p["beta"], lam=p["lam"], outer_iters=p["outer_iters"],
    )
    alm_cfg = lowrank_alm.ALMConfig(
        alpha=p["alpha"], lam=p["lam"], tol=p["alm_tol"],
        max_iters=p["alm_max_iters"], rho=p["alm_rho"],
        constraint_mode=p["constraint_mode"], shrink_mode=p["shrink_mode"],
    )
    graph_cfg = hash_trainer.GraphConfig(L=p["graph_l"], k=p["graph_k"])
    kernel_cfg = hash_trainer.KernelSelectConfig(
        R=p["kernel_r"] or None, mode=p["kernel_mode"],
        self_tuning_k=p["self_tuning_k"],
    )
    oos_cfg = hash_trainer.OosConfig(Z=p["oos_z"], k_oos=p["k_oos"])
    return hp, alm_cfg, graph_cfg, kernel_cfg, oos_cfg


def _encode_db(model, ds, snapshot, recovery=True):
    """Database codes for a dataset using the model's landmarks and bandwidths,
    with the consensus similarity recovered on that database."""
    K_list = kernel_sim.build_view_kernels(ds, model.landmarks, model.kernel_config)
    if recovery:
        alm_cfg = lowrank_alm.ALMConfig(
            alpha=snapshot.get("alpha", 0.1),
            lam=snapshot.get("lam", 1e-3),
            tol=snapshot.get("alm_tol", 1e-6),
            max_iters=snapshot.get("alm_max_iters", 300),
            rho=snapshot.get("alm_rho", 1.3),
            constraint_mode=snapshot.get("constraint_mode", "nonneg"),
            shrink_mode=snapshot.get("shrink_mode", "column-l21"),
        )
        Khat, _, _ = lowrank_alm.recover(K_list, alm_cfg)
    else:
        Khat = hash_trainer.mean_kernel_baseline(K_list)
    return hash_trainer.encode_database(model, Khat)


def cmd_synth(args):
    p = _resolve(args, {
        "clusters": (int, 10),
        "per_cluster": (int, 200),
        "dims": (_dims, (32, 48)),
        "view_noise": (float, 0.1),
        "seed": (int, 0),
        "name": (str, "synthetic"),
    })
    ds = dataset.synth_multiview(
        p["clusters"], p["per_cluster"], p["dims"],
        view_noise=p["view_noise"], seed=p["seed"],
    )
    manifest = dataset.save_dataset(ds, args.out, name=p["name"])
    print(f"wrote {manifest} ({ds.n_samples} samples, {ds.n_views} views)")
    return 0


def cmd_corrupt(args):
    p = _resolve(args, {
        "kind": (str, "gaussian-fraction"),
        "fraction": (float, 0.2),
        "seed": (int, 0),
        "name": (str, ""),
    })
    ds = dataset.load_dataset(args.manifest)
    spec = dataset.CorruptionSpec(kind=p["kind"], fraction=p["fraction"], seed=p["seed"])
    out = dataset.corrupt(ds, spec)
    name = p["name"] or f"{ds.name}_corrupted"
    manifest = dataset.save_dataset(out, args.out, name=name)
    print(f"wrote {manifest}")
    return 0


def cmd_train(args):
    p = _resolve(args, _TRAIN_SPEC)
    ds = dataset.load_dataset(args.manifest)
    hp, alm_cfg, graph_cfg, kernel_cfg, oos_cfg = _train_configs(p)
    model, _, _, diag = hash_trainer.train(
        ds, hp, alm_cfg=alm_cfg, graph_cfg=graph_cfg, kernel_cfg=kernel_cfg,
        oos_cfg=oos_cfg, seed=p["seed"], recovery=not p["no_recovery"],
        query_mode=p["query_mode"],
    )
    model_io.save_model(model, args.model, config_snapshot=p)
    prefix = args.trace_prefix or str(Path(args.model).with_suffix(""))
    diag.objective_csv(f"{prefix}_objective.csv")
    if diag.alm is not None:
        diag.alm.to_csv(f"{prefix}_alm_residuals.csv")
    print(
        f"wrote {args.model} (P={hp.P}, outer iterations={diag.outer_iterations}, "
        f"converged={diag.converged})"
    )
    return 0


def _write_codes(codes, path):
    # codes are (n, P) +/-1; stored as a (P, n) MVH1 matrix
    dataset.save_view(path, codes.T.astype(np.float32))


def cmd_encode(args):
    p = _resolve(args, {"no_recovery": (bool, False)})
    model, snapshot = model_io.load_model(args.model)
    ds = dataset.load_dataset(args.manifest)
    codes = _encode_db(model, ds, snapshot, recovery=not p["no_recovery"])
    _write_codes(codes, args.out)
    print(f"wrote {args.out} ({codes.shape[0]} codes of {codes.shape[1]} bits)")
    return 0


def cmd_query(args):
    p = _resolve(args, {"mode": (str, "")})
    model, _ = model_io.load_model(args.model)
    ds = dataset.load_dataset(args.manifest)
    codes = hash_trainer.encode_queries(model, ds, mode=p["mode"] or None)
    _write_codes(codes, args.out)
    print(f"wrote {args.out} ({codes.shape[0]} codes of {codes.shape[1]} bits)")
    return 0


def cmd_eval(args):
    p = _resolve(args, {
        "top_k": (int, 100),
        "radius": (int, 2),
        "no_recovery": (bool, False),
    })
    model, snapshot = model_io.load_model(args.model)
    db = dataset.load_dataset(args.db)
    queries = dataset.load_dataset(args.queries)
    if db.labels is None or queries.labels is None:
        raise ValueError("both database and query datasets need labels to evaluate")
    for m, (dd, qd) in enumerate(zip(db.dims, queries.dims)):
        if dd != qd:
            raise ValueError(
                f"view {m} dimension mismatch: database {dd}, queries {qd}"
            )
    db_codes = _encode_db(model, db, snapshot, recovery=not p["no_recovery"])
    query_codes = hash_trainer.encode_queries(model, queries)
    relevant = evaluation.relevance_matrix(queries.labels, db.labels)
    report = evaluation.evaluate(
        query_codes, db_codes, relevant, top_k=p["top_k"], radius=p["radius"]
    )
    prefix = args.out_prefix
    report.to_json(f"{prefix}_report.json")
    report.pr_csv(f"{prefix}_pr.csv")
    print(
        f"MAP@{report.top_k}={report.map:.4f}  "
        f"lookup@r{report.radius}={report.lookup_precision_mean:.4f} "
        f"(coverage {report.lookup_coverage:.2f})"
    )
    return 0


def cmd_inspect(args):
    model, snapshot = model_io.load_model(args.model)
    print(f"code length P: {model.code_length}")
    print(f"kernel landmarks R: {model.landmarks.R} ({model.landmarks.mode})")
    print(f"view dims: {[b.shape[1] for b in model.landmarks.blocks]}")
    print(f"sigmas: {[round(s, 6) for s in model.kernel_config.sigmas]}")
    print(f"sigma_concat: {model.kernel_config.sigma_concat:.6g}")
    print(f"query mode: {model.query_mode}")
    if model.base_set is not None:
        print(f"base set: Z={model.base_set.Z}, k_oos={model.base_set.k_oos}")
    print(f"meta: {model.meta}")
    if snapshot:
        print(f"training config: {snapshot}")
    return 0


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rmvhash",
        description="Robust multi-view hashing: train, encode, and evaluate",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("synth", help="generate a synthetic multi-view dataset")
    _add_common(s)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--name")
    s.add_argument("--clusters", type=int)
    s.add_argument("--per-cluster", dest="per_cluster", type=int)
    s.add_argument("--dims", type=_dims)
    s.add_argument("--view-noise", dest="view_noise", type=float)
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("corrupt", help="apply a corruption protocol to a dataset")
    _add_common(s)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--name")
    s.add_argument("--kind", choices=["gaussian-fraction", "block-zero"])
    s.add_argument("--fraction", type=float)
    s.set_defaults(func=cmd_corrupt)

    s = subs.add_parser("train", help="train a hash model on a dataset")
    _add_common(s)
    s.add_argument("--manifest", required=True)
    s.add_argument("--model", required=True, help="output model file")
    s.add_argument("--trace-prefix", dest="trace_prefix")
    s.add_argument("--bits", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--lam", type=float)
    s.add_argument("--outer-iters", dest="outer_iters", type=int)
    s.add_argument("--graph-l", dest="graph_l", type=int)
    s.add_argument("--graph-k", dest="graph_k", type=int)
    s.add_argument("--kernel-r", dest="kernel_r", type=int)
    s.add_argument("--kernel-mode", dest="kernel_mode")
    s.add_argument("--self-tuning-k", dest="self_tuning_k", type=int)
    s.add_argument("--alm-tol", dest="alm_tol", type=float)
    s.add_argument("--alm-max-iters", dest="alm_max_iters", type=int)
    s.add_argument("--alm-rho", dest="alm_rho", type=float)
    s.add_argument("--constraint-mode", dest="constraint_mode",
                   choices=["nonneg", "simplex"])
    s.add_argument("--shrink-mode", dest="shrink_mode",
                   choices=["column-l21", "elementwise"])
    s.add_argument("--oos-z", dest="oos_z", type=int)
    s.add_argument("--k-oos", dest="k_oos", type=int)
    s.add_argument("--no-recovery", dest="no_recovery", action="store_const", const=True)
    s.add_argument("--query-mode", dest="query_mode", choices=["concat", "view-sum"])
    s.set_defaults(func=cmd_train)

    s = subs.add_parser("encode", help="encode a database with a trained model")
    _add_common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-recovery", dest="no_recovery", action="store_const", const=True)
    s.set_defaults(func=cmd_encode)

    s = subs.add_parser("query", help="encode query samples with a trained model")
    _add_common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=["concat", "view-sum"])
    s.set_defaults(func=cmd_query)

    s = subs.add_parser("eval", help="retrieval metrics for a model on db/query sets")
    _add_common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--db", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--out-prefix", dest="out_prefix", required=True)
    s.add_argument("--top-k", dest="top_k", type=int)
    s.add_argument("--radius", type=int)
    s.add_argument("--no-recovery", dest="no_recovery", action="store_const", const=True)
    s.set_defaults(func=cmd_eval)

    s = subs.add_parser("inspect", help="print model metadata")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: train, select, cv, evaluate, export-rules, grad-check.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import io
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, NormParams, load_csv, load_thyroid_csv, save_dataset, normalize, thyroid_path
from .evaluation import cross_validate, decision_surface, evaluate, holdout
from .initialize import InitConfig, init_rulebase
from .network import FORMAT_HEADER, RuleBase, dumps_rulebase, format_rules, loads_rulebase
from .scg import Budget, grad_check
from .select import POLICIES, SelectionConfig
from .train import PARAM_GROUPS, TrainConfig, objective

log = logging.getLogger("hedgefuzzy")

# key -> (type, default); the flat key=value config file uses the same keys
OPTIONS = {
    "data": (str, ""),
    "label_column": (str, "first"),
    "norm": (str, "minmax"),
    "split": (float, 0.6),
    "k": (int, 4),
    "seed": (int, 42),
    "seeds": (str, ""),
    "clusters": (int, 1),
    "restarts": (int, 10),
    "kmeans_max_iter": (int, 100),
    "width_rule": (str, "cluster-std"),
    "plusplus": (bool, False),
    "hedge_mode": (str, "nonneg"),
    "trainable": (str, "c,sigma,p,w"),
    "max_iter": (int, 500),
    "grad_tol": (float, 1e-6),
    "obj_tol": (float, 1e-10),
    "policy": (str, "backward-step"),
    "tau": (float, None),
    "m": (int, None),
    "score": (str, "sum"),
    "aggregate": (str, "max"),
    "select_clusters": (int, 1),
    "pipeline": (str, "all"),
    "out": (str, "run"),
}


# short policy names accepted on the command line
POLICY_ALIASES = {
    "product": "threshold-product",
    "sum": "threshold-sum",
    "backward": "backward-step",
    "top": "top-m",
}


class ConfigError(ValueError):
    pass


def _coerce(key, raw):
    typ = OPTIONS[key][0]
    if raw is None or isinstance(raw, typ):
        return raw
    if typ is bool:
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in OPTIONS:
            raise ConfigError(f"{path}:{n}: unknown or malformed entry {line!r}")
        out[key] = _coerce(key, val.strip())
    return out


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    def init_config(self) -> InitConfig:
        return InitConfig(
            clusters_per_class=self.clusters,
            kmeans_max_iter=self.kmeans_max_iter,
            kmeans_restarts=self.restarts,
            width_rule=self.width_rule,
            plusplus=self.plusplus,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            hedge_mode=self.hedge_mode,
            trainable=tuple(t.strip() for t in self.trainable.split(",") if t.strip()),
            budget=Budget(self.max_iter, self.grad_tol, self.obj_tol),
            seed=self.seed,
        )

    def selection_config(self) -> SelectionConfig:
        return SelectionConfig(
            policy=self.policy,
            tau=self.tau,
            m=self.m,
            score=self.score,
            aggregate=self.aggregate,
            clusters=self.select_clusters,
        )

    def seed_list(self):
        if not self.seeds:
            return [self.seed]
        return [int(s) for s in self.seeds.split(",") if s.strip()]

    def header(self) -> str:
        """Comment block embedded at the top of every artifact."""
        lines = [f"# hedgefuzzy {__version__}"]
        lines += [f"# {k}={'' if v is None else v}" for k, v in sorted(self.values.items())]
        return "\n".join(lines) + "\n"


def build_config(args) -> RunConfig:
    vals = {k: d for k, (_, d) in OPTIONS.items()}
    if getattr(args, "config", None):
        vals.update(read_config_file(args.config))
    for key in OPTIONS:
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = _coerce(key, v)
    vals["policy"] = POLICY_ALIASES.get(vals["policy"], vals["policy"])
    cfg = RunConfig(vals)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.clusters < 1 or cfg.select_clusters < 1:
        raise ConfigError("clusters must be >= 1")
    if not 0.0 < cfg.split < 1.0:
        raise ConfigError("split must lie strictly between 0 and 1")
    if cfg.k < 2:
        raise ConfigError("k must be >= 2")
    if cfg.norm not in ("minmax", "zscore", "none"):
        raise ConfigError("norm must be minmax, zscore or none")
    if cfg.label_column not in ("first", "last"):
        raise ConfigError("label_column must be first or last")
    if cfg.hedge_mode not in ("constrained01", "nonneg"):
        raise ConfigError("hedge_mode must be constrained01 or nonneg")
    groups = [t.strip() for t in cfg.trainable.split(",") if t.strip()]
    if not groups or any(g not in PARAM_GROUPS for g in groups):
        raise ConfigError(f"trainable must be a comma list drawn from {','.join(PARAM_GROUPS)}")
    if cfg.policy not in POLICIES:
        raise ConfigError(f"policy must be one of {', '.join(POLICIES)}")
    if cfg.pipeline not in ("all", "lhnfcsf"):
        raise ConfigError("pipeline must be all or lhnfcsf")
    if cfg.max_iter < 0 or cfg.restarts < 1 or cfg.kmeans_max_iter < 1:
        raise ConfigError("iteration counts must be positive")
    try:
        cfg.seed_list()
    except ValueError:
        raise ConfigError("seeds must be a comma-separated list of integers") from None


# -- artifacts -----------------------------------------------------------------


def _norm_mode(cfg):
    return None if cfg.norm == "none" else cfg.norm


def load_data(cfg: RunConfig):
    if not cfg.data or cfg.data == "thyroid":
        return load_thyroid_csv(thyroid_path())
    path = Path(cfg.data)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    if path.name.lower().startswith("new-thyroid"):
        return load_thyroid_csv(path, label_column=cfg.label_column)
    return load_csv(path, label_column=cfg.label_column)


def dumps_model(rb: RuleBase, norm: NormParams | None, ds, header: str = "") -> str:
    lines = [header.rstrip("\n")] if header else []
    lines.append("feature_names " + "\t".join(ds.feature_names))
    lines.append("class_names " + "\t".join(ds.class_names))
    if norm is not None:
        lines.append(f"norm {norm.mode}")
        lines.append("norm_offset " + " ".join(repr(float(v)) for v in norm.offset))
        lines.append("norm_scale " + " ".join(repr(float(v)) for v in norm.scale))
        lines.append("norm_degenerate " + " ".join(str(int(v)) for v in norm.degenerate))
    return "\n".join(lines) + "\n" + dumps_rulebase(rb)


def loads_model(text: str):
    """Return (RuleBase, NormParams or None, feature_names, class_names)."""
    head, sep, body = text.partition(FORMAT_HEADER)
    if not sep:
        raise ValueError("model file has no rule base section")
    rb = loads_rulebase(FORMAT_HEADER + body)
    fields = {}
    for line in head.splitlines():
        if line and not line.startswith("#"):
            key, _, rest = line.partition(" ")
            fields[key] = rest
    norm = None
    if "norm" in fields:
        norm = NormParams(
            fields["norm"],
            np.array(fields["norm_offset"].split(), dtype=float),
            np.array(fields["norm_scale"].split(), dtype=float),
            np.array(fields["norm_degenerate"].split(), dtype=int).astype(bool),
        )
    fnames = fields.get("feature_names", "").split("\t") if fields.get("feature_names") else None
    cnames = fields.get("class_names", "").split("\t") if fields.get("class_names") else None
    return rb, norm, fnames, cnames


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _history_csv(history) -> str:
    buf = io.StringIO()
    buf.write("iteration,cost,rmse,grad_norm\n")
    for h in history:
        buf.write(f"{h['iteration']},{h['cost']!r},{h['rmse']!r},{h['grad_norm']!r}\n")
    return buf.getvalue()


def _confusion_csv(m) -> str:
    buf = io.StringIO()
    K = m.confusion.shape[0]
    buf.write("true," + ",".join(f"pred_{k + 1}" for k in range(K)) + "," + ",".join(f"norm_pred_{k + 1}" for k in range(K)) + "\n")
    normed = m.confusion_normalized()
    for k in range(K):
        buf.write(f"{k + 1}," + ",".join(str(int(v)) for v in m.confusion[k]) + "," + ",".join(f"{v:.6f}" for v in normed[k]) + "\n")
    return buf.getvalue()


def _holdout_run(cfg: RunConfig, selection):
    ds = load_data(cfg)
    plan, res = holdout(
        ds,
        cfg.seed,
        cfg.split,
        cfg.init_config(),
        cfg.train_config(),
        selection,
        _norm_mode(cfg),
    )
    return ds, plan, res


def _emit_holdout(cfg, ds, plan, res, out: Path) -> None:
    hdr = cfg.header()
    train_ds = ds.subset(plan.train_indices)
    norm = None
    if _norm_mode(cfg):
        train_ds, norm = normalize(train_ds, cfg.norm)
    _write(out / "model.txt", dumps_model(res.rulebase, norm, ds, hdr))
    _write(out / "history.csv", hdr + _history_csv(res.history))
    report = [hdr, f"rules {res.rulebase.n_rules}", "features " + " ".join(str(j + 1) for j in res.features)]
    report.append(f"train samples {plan.train_indices.size}  test samples {plan.test_indices.size}")
    report.append(f"optimizer status {res.scg_status}")
    report.append(res.train.to_text("train"))
    report.append(res.test.to_text("test"))
    _write(out / "report.txt", "\n".join(report))
    _write(out / "confusion_test.csv", hdr + _confusion_csv(res.test))
    # plain CSV stays loadable; its sidecar carries the run config
    save_dataset(train_ds, out / "train_normalized.csv", seed=cfg.seed, run_config=dict(cfg.values),
                 train_indices=plan.train_indices, test_indices=plan.test_indices)


# -- subcommands -----------------------------------------------------------------


def cmd_train(cfg: RunConfig) -> int:
    selection = cfg.selection_config() if cfg.pipeline == "lhnfcsf" else None
    ds, plan, res = _holdout_run(cfg, selection)
    out = Path(cfg.out)
    _emit_holdout(cfg, ds, plan, res, out)
    print(f"train accuracy {res.train.accuracy:.4f} %  test accuracy {res.test.accuracy:.4f} %  rmse {res.train.rmse:.6g}")
    print(f"artifacts written to {out}")
    return 0


def cmd_select(cfg: RunConfig) -> int:
    ds, plan, res = _holdout_run(cfg, cfg.selection_config())
    out = Path(cfg.out)
    _emit_holdout(cfg, ds, plan, res, out)
    rep = res.selection
    table = rep.to_table(ds.feature_names, ds.class_names)
    _write(out / "selection.txt", cfg.header() + table)
    buf = io.StringIO()
    rep.write_csv(buf, ds.class_names)
    _write(out / "selection.csv", cfg.header() + buf.getvalue())
    print(table, end="")
    print(f"test accuracy on kept features {res.test.accuracy:.4f} %")
    return 0


def cmd_cv(cfg: RunConfig) -> int:
    ds = load_data(cfg)
    selection = cfg.selection_config() if cfg.pipeline == "lhnfcsf" else None
    res = cross_validate(ds, cfg.k, cfg.seed_list(), cfg.init_config(), cfg.train_config(), selection, _norm_mode(cfg))
    out = Path(cfg.out)
    buf = io.StringIO()
    res.write_csv(buf)
    _write(out / "cv_folds.csv", cfg.header() + buf.getvalue())
    _write(out / "cv_summary.txt", cfg.header() + res.to_text())
    print(res.to_text(), end="")
    return 0


def cmd_evaluate(cfg: RunConfig, model_path, surface=None, resolution=50) -> int:
    rb, norm, _, _ = _read_model(model_path)
    ds = load_data(cfg)
    if ds.n_features != rb.n_features:
        raise DataError(f"model expects {rb.n_features} features, data has {ds.n_features}")
    X = norm.apply(ds.features) if norm is not None else ds.features
    ds_n = replace(ds, features=X)
    m = evaluate(rb, ds_n)
    out = Path(cfg.out)
    text = m.to_text("evaluate")
    if surface:
        a, b = (int(t) - 1 for t in surface.split(","))
        ga, gb, pred = decision_surface(rb, (a, b), X.mean(axis=0), resolution)
        buf = io.StringIO()
        buf.write(f"feature_{a + 1},feature_{b + 1},predicted\n")
        for i, va in enumerate(ga):
            for j, vb in enumerate(gb):
                buf.write(f"{va!r},{vb!r},{int(pred[i, j])}\n")
        surf_text = cfg.header() + buf.getvalue()
    _write(out / "evaluation.txt", cfg.header() + text)
    _write(out / "confusion.csv", cfg.header() + _confusion_csv(m))
    if surface:
        _write(out / "surface.csv", surf_text)
    print(text, end="")
    return 0


def _read_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot read model file: {exc}") from None
    return loads_model(text)


def cmd_export_rules(model_path, out=None) -> int:
    rb, _, fnames, cnames = _read_model(model_path)
    text = format_rules(rb, fnames, cnames)
    if out:
        _write(Path(out), text)
    print(text, end="")
    return 0


def cmd_grad_check(cfg: RunConfig, trials: int = 5, tol: float = 1e-4) -> int:
    ds = load_data(cfg)
    ds, _ = normalize(ds, cfg.norm if cfg.norm != "none" else "minmax")
    rng = np.random.default_rng(cfg.seed)
    rb0 = init_rulebase(ds, replace(cfg.init_config(), seed=cfg.seed))
    worst = 0.0
    for t in range(trials):
        codec, f, g = objective(rb0, ds.features, ds.labels, cfg.train_config())
        theta = codec.encode(rb0) + rng.normal(0.0, 0.3, codec.size)
        err = grad_check(f, g, theta)
        worst = max(worst, err)
        print(f"trial {t + 1}: max relative error {err:.3e}")
    ok = worst < tol
    print(f"worst {worst:.3e} ({'ok' if ok else 'FAILED'}, tolerance {tol:g})")
    return 0 if ok else 1


# -- parser ----------------------------------------------------------------------


def _add_run_options(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    for key, (typ, default) in OPTIONS.items():
        flag = "--" + key.replace("_", "-")
        if typ is bool:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=key, default=None, help=f"default: {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hedgefuzzy", description="Linguistic-hedge neuro-fuzzy classifier")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "select", "cv"):
        _add_run_options(sub.add_parser(name))
    p = sub.add_parser("evaluate")
    _add_run_options(p)
    p.add_argument("--model", required=True)
    p.add_argument("--surface", help="two 1-based feature ids, e.g. 1,2, for a decision-surface grid dump")
    p.add_argument("--resolution", type=int, default=50)
    p = sub.add_parser("export-rules")
    p.add_argument("model")
    p.add_argument("--out")
    p = sub.add_parser("grad-check")
    _add_run_options(p)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-4)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "export-rules":
            return cmd_export_rules(args.model, args.out)
        cfg = build_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "cv":
            return cmd_cv(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.model, args.surface, args.resolution)
        return cmd_grad_check(cfg, args.trials, args.tol)
    except ConfigError as exc:
        print(f"hedgefuzzy: config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"hedgefuzzy: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        code = 2 if "no rows" in str(exc) else 1
        print(f"hedgefuzzy: {exc}", file=sys.stderr)
        return code
    except (RuntimeError, ValueError) as exc:
        print(f"hedgefuzzy: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``proxdeep {fit,path,select,predict}``.

Exit status: 0 on success, 1 on a runtime failure (divergence, numerical
breakdown), 2 on an invalid configuration or input.
"""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import kernels
from .admm import fit
from .config import ConfigError, load_config, parse_config, substream
from .data import DataError, Scaler, load_csv, load_iris, standardize, stratified_split
from .network import params_from_dict, params_to_dict, predict_proba
from .objectives import classify_rate
from .path import run_path
from .select import evaluate, rank

log = logging.getLogger("proxdeep")


def _dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def prepare_data(cfg):
    """Load, split and standardise according to ``cfg.data``.

    The scaler is estimated on the training part only.
    """
    d = cfg.data
    try:
        if d.path is None:
            ds = load_iris()
        else:
            ds = load_csv(d.path, d.feature_columns, d.label_column, d.header, d.target)
    except (OSError, DataError) as e:
        raise ConfigError(f"data: {e}") from None
    if d.train_frac is None:
        train, test = ds, None
    elif d.target == "class":
        train, test = stratified_split(ds, d.train_frac, substream(cfg.seed, "split"))
    else:
        perm = np.random.default_rng(substream(cfg.seed, "split")).permutation(ds.n)
        n_tr = int(round(d.train_frac * ds.n))
        train, test = ds.subset(np.sort(perm[:n_tr])), ds.subset(np.sort(perm[n_tr:]))
    scaler = None
    if d.standardize:
        try:
            train, scaler = standardize(train)
        except DataError as e:
            raise ConfigError(f"data: {e}") from None
        if test is not None:
            test = test.subset(np.arange(test.n))
            test.x = scaler.apply(test.x)
    return ds, train, test, scaler


def build_arch(arch_cfg, train, where="arch"):
    n_out = train.n_classes if train.labels is not None else train.targets().shape[0]
    if arch_cfg.layer_dims[0] != n_out:
        raise ConfigError(f"{where}.layer_dims.0: output layer has {arch_cfg.layer_dims[0]} "
                          f"units but the data has {n_out} targets/classes")
    if (arch_cfg.loss == "multinomial") != (train.labels is not None):
        raise ConfigError(f"{where}.loss: {arch_cfg.loss} does not match the data target type")
    try:
        return arch_cfg.build(train.x.shape[0])
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


def _rate(arch, params, ds):
    if ds is None or ds.labels is None:
        return float("nan")
    return classify_rate(predict_proba(arch, params, ds.x), ds.targets())


def _params_doc(arch, params, ds, scaler):
    doc = params_to_dict(arch, params)
    doc["scaler"] = scaler.to_dict() if scaler is not None else None
    doc["feature_names"] = list(ds.feature_names)
    doc["class_names"] = ds.class_names
    return doc


def cmd_fit(cfg, out):
    ds, train, test, scaler = prepare_data(cfg)
    arch = build_arch(cfg.arch, train)
    pen = cfg.penalty.build()
    admm_cfg = cfg.admm.build(substream(cfg.seed, "init"))
    report = fit(train.targets(), train.x, arch, pen, admm_cfg)
    train_rate = _rate(arch, report.params, train)
    test_rate = _rate(arch, report.params, test)
    os.makedirs(out, exist_ok=True)
    doc = report.to_dict()
    doc.update(train_rate=train_rate if np.isfinite(train_rate) else None,
               test_rate=test_rate if np.isfinite(test_rate) else None,
               dataset=ds.metadata(), backend=kernels.BACKEND,
               config=cfg.model_dump())
    _dump(doc, os.path.join(out, "fit_report.json"))
    report.write_trace_csv(os.path.join(out, "trace.csv"))
    _dump(_params_doc(arch, report.params, ds, scaler), os.path.join(out, "params.json"))
    f = report.final
    print(f"fit: iters={len(report.records)} converged={report.converged} "
          f"objective={f['objective']:.6g} primal={f['primal_res']:.3g} dual={f['dual_res']:.3g} "
          f"train_rate={train_rate:.4f} test_rate={test_rate:.4f} "
          f"nonzero={report.nonzero_fraction:.3f}")
    return report


def cmd_path(cfg, out, workers):
    ds, train, test, _ = prepare_data(cfg)
    arch = build_arch(cfg.arch, train)
    spec = cfg.path_spec()
    admm_cfg = cfg.admm.build(0)
    report = run_path(train.targets(), train.x,
                      None if test is None else test.targets(),
                      None if test is None else test.x, arch, spec, admm_cfg, workers)
    os.makedirs(out, exist_ok=True)
    doc = report.to_dict()
    doc["dataset"] = ds.metadata()
    _dump(doc, os.path.join(out, "path_report.json"))
    report.write_table_csv(os.path.join(out, "table2.csv"))
    for r in report.summary():
        print(f"path: mu={r['mu_l']:g} gamma_w={r['gamma_w']:g} "
              f"nonzero={r['pct_nonzero_w']:.2f} train={r['train_rate']:.3f} "
              f"test={r['test_rate']:.3f} failed={r['n_failed']}")
    return report


def cmd_select(cfg, out):
    sel = cfg.select
    if not sel.models:
        raise ConfigError("select.models: at least one model is required")
    ds, train, test, _ = prepare_data(cfg)
    archs = [build_arch(m.arch, train, f"select.models.{i}.arch")
             for i, m in enumerate(sel.models)]
    if sel.df_mode == "perturb" and sel.eps is None:
        raise ConfigError("select.eps: required when df_mode is 'perturb'")
    admm_cfg = cfg.admm.build(substream(cfg.seed, "init"))
    y = train.targets()
    reports = []
    for m, arch in zip(sel.models, archs):
        pen = m.penalty.build()
        fr = fit(y, train.x, arch, pen, admm_cfg)
        reports.append(evaluate(m.name, arch, fr.params, y, train.x, pen, sel.c, sel.sigma2,
                                sel.df_mode, admm_cfg, sel.eps, fr.state))
    criterion = sel.criterion
    if criterion == "sure" and any(a.loss == "multinomial" for a in archs):
        log.warning("SURE is undefined for the multinomial loss; ranking by IC")
        criterion = "ic"
    ranked = rank(reports, criterion)
    os.makedirs(out, exist_ok=True)
    _dump({"criterion": criterion,
           "ranking": [r.name for r in ranked],
           "models": [r.to_dict() for r in ranked]}, os.path.join(out, "selection.json"))
    for i, r in enumerate(ranked):
        print(f"select: {i + 1}. {r.name} ic={r.ic:.6g} sure={r.sure:.6g} df={r.df:.4g}")
    return ranked


def cmd_predict(params_path, data_path, out):
    try:
        with open(params_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        arch, params = params_from_dict(doc)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"params: {e}") from None
    names = doc.get("feature_names") or None
    try:
        ds = load_csv(data_path, feature_columns=names, label_column=None)
    except (OSError, DataError) as e:
        raise ConfigError(f"data: {e}") from None
    if ds.x.shape[0] != arch.input_dim:
        raise ConfigError(f"data: {ds.x.shape[0]} features but the model expects {arch.input_dim}")
    x = ds.x
    if doc.get("scaler"):
        x = Scaler.from_dict(doc["scaler"]).apply(x)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "predictions.csv")
    if arch.loss == "multinomial":
        probs = predict_proba(arch, params, x)
        classes = doc.get("class_names") or [str(k) for k in range(probs.shape[0])]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"prob_{c}" for c in classes] + ["label"])
            for i in range(probs.shape[1]):
                w.writerow([repr(float(p)) for p in probs[:, i]] + [classes[int(np.argmax(probs[:, i]))]])
    else:
        from .network import forward
        pred = forward(arch, params, x)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"yhat_{k}" for k in range(pred.shape[0])])
            for i in range(pred.shape[1]):
                w.writerow([repr(float(v)) for v in pred[:, i]])
    print(f"predict: wrote {x.shape[1]} rows to {path}")
    return path


def _parser():
    p = argparse.ArgumentParser(prog="proxdeep", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("fit", "train one model"),
                        ("path", "regularisation path over gamma_w and mu"),
                        ("select", "rank architectures by IC or SURE")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON run configuration (defaults: Iris example)")
        sp.add_argument("--out", help="output directory (default: config output_dir or ./out)")
        sp.add_argument("--seed", type=int, help="override the top-level seed")
        sp.add_argument("--sequential", action="store_true",
                        help="no worker threads; byte-stable output")
    sp = sub.add_parser("predict", help="class probabilities for new data")
    sp.add_argument("--params", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", default=".")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "predict":
            cmd_predict(args.params, args.data, args.out)
            return 0
        cfg = load_config(args.config) if args.config else parse_config({})
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        out = args.out or cfg.output_dir or "out"
        if args.command == "fit":
            cmd_fit(cfg, out)
        elif args.command == "path":
            cmd_path(cfg, out, 1 if args.sequential else None)
        else:
            cmd_select(cfg, out)
    except (ConfigError, DataError) as e:
        print(f"proxdeep: config error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"proxdeep: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

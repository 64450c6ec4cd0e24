"""Command-line interface.

Every output file ``X`` is paired with ``X.json`` recording the command and
its full configuration. ``--from-sidecar X.json`` re-runs that exact
configuration (output paths given on the command line take precedence).

Exit codes: 0 success, 2 usage error, 3 unreadable input,
4 invalid data, 5 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from joblib import Parallel, delayed

from . import __version__
from .backtest import (
    BacktestConfig,
    compare,
    read_records,
    rolling_forecast,
    score_records,
    write_records,
    write_tidy,
)
from .data import DataError, ReturnSeries, load_price_csv, load_return_csv, to_log_returns, write_return_csv
from .estimator import RiskForecaster
from .mcmc import Chain, MCMCError, format_summary, posterior_summary, write_summary_csv
from .models import MODELS, FilterError
from .sim import simulate_nonlinear_sv

log = logging.getLogger("lstmal")

EXIT_USAGE, EXIT_IO, EXIT_DATA, EXIT_FIT = 2, 3, 4, 5
OUTPUT_KEYS = ("out", "summary", "report", "tidy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _model_list(text: str) -> list:
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in MODELS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown model(s) {bad}; choose from {sorted(MODELS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lstmal", description="Bayesian joint VaR/ES forecasting.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--from-sidecar", metavar="JSON", help="re-run the configuration stored in a sidecar")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def data_input(sp):
        sp.add_argument("--input", required=False, help="date,return CSV (or date,close with --prices)")
        sp.add_argument("--prices", action="store_true", help="input holds closing prices")

    def mcmc_args(sp):
        sp.add_argument("--model", default="lstm-al", choices=sorted(MODELS))
        sp.add_argument("--alpha", type=float, default=0.01)
        sp.add_argument("--iters", type=int, default=50_000)
        sp.add_argument("--burnin", type=int, default=15_000)

    s = sub.add_parser("simulate", help="simulate the nonlinear SV return model")
    common(s)
    s.add_argument("--total", type=int, default=6000)
    s.add_argument("--keep", type=int, default=2000)
    s.add_argument("--no-logvol", action="store_true", help="omit the logvol column")
    s.add_argument("--out", help="output CSV")

    f = sub.add_parser("fit", help="estimate one model by adaptive MCMC")
    common(f)
    data_input(f)
    mcmc_args(f)
    f.add_argument("--n-in", type=int, default=None, help="use only the first N returns")
    f.add_argument("--out", help="chain CSV")
    f.add_argument("--summary", help="posterior summary CSV")

    b = sub.add_parser("backtest", help="rolling one-step-ahead VaR/ES forecasts")
    common(b)
    data_input(b)
    mcmc_args(b)
    b.set_defaults(model="lstm-al")
    b.add_argument("--models", type=_model_list, default=None,
                   help="comma-separated models to run and compare (overrides --model)")
    b.add_argument("--window", type=int, default=None,
                   help="in-sample window (default 2000 for prices, 1000 for returns)")
    b.add_argument("--refit-every", type=int, default=1)
    b.add_argument("--no-warm-start", action="store_true")
    b.add_argument("--predictive", choices=("mean", "posterior"), default="mean")
    b.add_argument("--jobs", type=int, default=1, help="models run in parallel")
    b.add_argument("--out", help="forecast CSV (t,date,return,var,es,refit)")
    b.add_argument("--report", help="score report / comparison CSV")
    b.add_argument("--tidy", help="long-format t,series,value CSV")

    e = sub.add_parser("evaluate", help="score an existing forecast CSV")
    common(e, seed=False)
    e.add_argument("--input")
    e.add_argument("--alpha", type=float, default=0.01)
    e.add_argument("--out", help="single-row report CSV")

    m = sub.add_parser("summarize", help="posterior summary of a chain CSV")
    common(m, seed=False)
    m.add_argument("--input")
    m.add_argument("--burnin", type=int, default=None, help="defaults to the chain's own burn-in")
    m.add_argument("--out", help="summary CSV")
    return p


def _config(args) -> dict:
    skip = {"from_sidecar", "verbose", *OUTPUT_KEYS}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _apply_sidecar(args, parser):
    meta = json.loads(Path(args.from_sidecar).read_text())
    if meta.get("command") != args.command:
        raise UsageError(f"sidecar records command {meta.get('command')!r}, not {args.command!r}")
    for k, v in meta.get("config", {}).items():
        setattr(args, k, v)
    for k, v in meta.get("outputs", {}).items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    return args


def _write_sidecar(path, args, extra: Optional[dict] = None) -> None:
    outputs = {k: getattr(args, k) for k in OUTPUT_KEYS if getattr(args, k, None) is not None}
    meta = {"command": args.command, "version": __version__, "config": _config(args), "outputs": outputs}
    meta.update(extra or {})
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _load_returns(args) -> ReturnSeries:
    if args.prices:
        return to_log_returns(load_price_csv(args.input))
    return load_return_csv(args.input)


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    _need(args, "out")
    sim = simulate_nonlinear_sv(args.total, args.keep, args.seed)
    extra = {} if args.no_logvol else {"logvol": sim.logvol}
    write_return_csv(args.out, sim.returns, extra)
    _write_sidecar(args.out, args)
    print(f"wrote {sim.t_keep} simulated returns to {args.out}")
    return 0


def cmd_fit(args) -> int:
    _need(args, "input", "out")
    r = _load_returns(args)
    if args.n_in is not None:
        r = r[: args.n_in]
    if args.iters <= 0:
        raise UsageError("--iters must be positive")
    est = RiskForecaster(model=args.model, alpha=args.alpha, n_iter=args.iters, burnin=args.burnin,
                         random_state=args.seed)
    est.fit(r)
    chain = est.chain_
    chain.to_csv(args.out)
    meta = chain.sidecar()
    meta["chain_config"] = meta.pop("config")
    _write_sidecar(args.out, args, meta)
    summary = posterior_summary(chain)
    if args.summary:
        write_summary_csv(args.summary, summary)
        _write_sidecar(args.summary, args)
    print(f"{args.model}: {chain.iters} iterations, burn-in {chain.burnin}, "
          f"acceptance rate {chain.acceptance_rate:.3f}")
    print(format_summary(summary))
    return 0


def _run_backtest(r, cfg):
    return rolling_forecast(r, cfg)


def _suffixed(path: str, model: str, many: bool) -> str:
    if not many:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{model}{p.suffix}"))


def cmd_backtest(args) -> int:
    _need(args, "input", "out")
    r = _load_returns(args)
    window = args.window if args.window is not None else (2000 if args.prices else 1000)
    args.window = window
    models = args.models or [args.model]
    cfgs = [
        BacktestConfig(model=m, alpha=args.alpha, window=window, refit_every=args.refit_every,
                       iters=args.iters, burnin=args.burnin, seed=args.seed,
                       warm_start=not args.no_warm_start, predictive=args.predictive)
        for m in models
    ]
    if args.jobs != 1 and len(cfgs) > 1:
        results = Parallel(n_jobs=args.jobs)(delayed(_run_backtest)(r, c) for c in cfgs)
    else:
        results = [_run_backtest(r, c) for c in cfgs]
    many = len(models) > 1
    by_model = {}
    for m, recs in zip(models, results):
        by_model[m] = recs
        out = _suffixed(args.out, m, many)
        write_records(out, recs)
        _write_sidecar(out, args, {"model": m})
        if args.tidy:
            write_tidy(_suffixed(args.tidy, m, many), recs)
    if args.tidy:
        _write_sidecar(args.tidy, args)

    print(f"window {window}, refit every {args.refit_every}, alpha {args.alpha:g}, "
          f"{len(next(iter(by_model.values())))} forecasts")
    if many:
        table = compare(by_model, args.alpha)
        print(table.to_text())
        if args.report:
            table.to_csv(args.report)
            _write_sidecar(args.report, args)
    else:
        rep = score_records(by_model[models[0]], args.alpha)
        print(rep.to_text())
        if args.report:
            rep.to_csv(args.report)
            _write_sidecar(args.report, args)
    return 0


def cmd_evaluate(args) -> int:
    _need(args, "input")
    rep = score_records(read_records(args.input), args.alpha)
    print(rep.to_text())
    if args.out:
        rep.to_csv(args.out)
        _write_sidecar(args.out, args)
    return 0


def cmd_summarize(args) -> int:
    _need(args, "input")
    chain = Chain.from_csv(args.input)
    summary = posterior_summary(chain, args.burnin)
    print(format_summary(summary))
    if args.out:
        write_summary_csv(args.out, summary)
        _write_sidecar(args.out, args)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "backtest": cmd_backtest,
    "evaluate": cmd_evaluate,
    "summarize": cmd_summarize,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.from_sidecar:
            args = _apply_sidecar(args, parser)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"lstmal: error[E{EXIT_USAGE}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"lstmal: error[E{EXIT_IO}]: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MCMCError, FilterError) as exc:
        print(f"lstmal: error[E{EXIT_FIT}]: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (DataError, ValueError) as exc:
        print(f"lstmal: error[E{EXIT_DATA}]: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line interface.

Subcommands:

* ``run``          — run a config without a sweep block, one row per policy.
* ``sweep``        — run a config's sweep, one row per (value, policy).
* ``oracle-check`` — cross-validate closed forms against the DP solver;
                     exits 2 on any tolerance violation.
* ``figure N``     — run the preset experiment behind report N (3..9) and
                     write its CSV plus a rendered figure alongside.

Exit codes: 0 success, 1 configuration error, 2 oracle-check violation.
The worker count is controlled only by the SPECTRUMSHARE_WORKERS
environment variable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .experiment import (
    FIGURE_NUMBERS,
    figure_config,
    oracle_check,
    oracle_report_csv,
    rows_to_csv,
    run_experiment,
)

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are configuration errors: exit 1, not argparse's 2.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="spectrumshare",
        description="Spectrum-sharing policy simulator over Markov-occupied channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool):
        if config_required:
            p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--runs", type=int, default=None, help="override run count")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--quiet", action="store_true", help="suppress progress logs")

    run_p = sub.add_parser("run", help="run a single (no-sweep) config")
    common(run_p, config_required=True)

    sweep_p = sub.add_parser("sweep", help="run a config with a sweep block")
    common(sweep_p, config_required=True)
    sweep_p.add_argument(
        "--plot", action="store_true", help="also render a figure next to the CSV"
    )

    oracle_p = sub.add_parser(
        "oracle-check", help="closed forms vs the DP solver; exit 2 on violation"
    )
    oracle_p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    oracle_p.add_argument("--quiet", action="store_true")

    fig_p = sub.add_parser("figure", help="run a preset experiment (3..9)")
    fig_p.add_argument("number", type=int, choices=FIGURE_NUMBERS)
    fig_p.add_argument("--seed", type=int, default=None, help="override base_seed")
    fig_p.add_argument("--runs", type=int, default=None, help="override run count")
    fig_p.add_argument("--out", default=None, help="output CSV path")
    fig_p.add_argument("--quiet", action="store_true")
    fig_p.add_argument(
        "--no-plot", action="store_true", help="skip the rendered figure"
    )
    return parser


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.runs is not None:
        config = replace(config, runs=args.runs)
    return config


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def _render(rows, csv_path: str | None, title: str) -> None:
    from .figures import render_sweep_figure

    if csv_path is None:
        log.warning("no --out path; skipping the figure render")
        return
    figure_path = Path(csv_path).with_suffix(".png")
    render_sweep_figure(rows, figure_path, title=title)
    log.info("wrote %s", figure_path)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.WARNING if args.quiet else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command == "oracle-check":
            report = oracle_check()
            _emit(oracle_report_csv(report), args.out)
            if not report.passed:
                for violation in report.violations:
                    log.error("%s", violation)
                return 2
            log.info(
                "oracle check passed: max gain error %.3g, max indifference residual %.3g",
                report.max_gain_error,
                report.max_indifference_residual,
            )
            return 0

        if args.command == "figure":
            config = _apply_overrides(figure_config(args.number), args)
            rows = run_experiment(config)
            out = args.out if args.out is not None else f"figure{args.number}.csv"
            _emit(rows_to_csv(rows), out)
            if not args.no_plot:
                _render(rows, out, title=f"figure {args.number} preset")
            return 0

        config = _apply_overrides(load_config(args.config), args)
        if args.command == "run" and config.sweep_variable is not None:
            raise ConfigError("'run' expects a config without a sweep; use 'sweep'")
        if args.command == "sweep" and config.sweep_variable is None:
            raise ConfigError("'sweep' expects a config with a sweep block")
        rows = run_experiment(config)
        _emit(rows_to_csv(rows), args.out)
        if args.command == "sweep" and args.plot:
            _render(rows, args.out, title=Path(args.config).stem)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Three commands: `validate` checks a network document and reports its
structure, `variance` runs posterior mean/second-moment/variance queries by
any method, and `reproduce` sweeps the built-in experiment families to CSV
(with a rendered PNG next to it).

Exit codes: 0 ok, 1 I/O or parse error, 2 structural or method mismatch,
3 impossible evidence.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .apm import MomentState
from .enumeration import BudgetExceededError
from .experiments import TARGETS, RunRecord, run_experiment
from .mcim import SampleConfig, estimate_moments
from .model import (
    DocumentError,
    Evidence,
    EvidenceImpossibleError,
    Network,
    StructureError,
    check_evidence,
    load_network,
    validate_network,
)
from .oracle import (
    QuadratureConfig,
    oracle_variance,
    quadrature_first_moment,
    quadrature_second_moment,
)

EXIT_OK = 0
EXIT_DOCUMENT = 1
EXIT_STRUCTURE = 2
EXIT_EVIDENCE = 3

CSV_HEADER = (
    "experiment,param_a,param_b,n,depth,method,value,std_error,wall_time_ms"
)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load(path: str) -> Network:
    return load_network(path)


def _parse_evidence(pairs: list[str], parser: argparse.ArgumentParser) -> Evidence:
    assignments: dict[str, int] = {}
    for item in pairs:
        node_id, sep, alt = item.partition("=")
        if not sep or not node_id:
            parser.error(f"evidence must be NODE=index, got {item!r}")
        try:
            assignments[node_id] = int(alt)
        except ValueError:
            parser.error(f"evidence index must be an integer, got {item!r}")
    return Evidence(assignments)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        net = _load(args.path)
    except DocumentError as exc:
        return _fail(str(exc), EXIT_DOCUMENT)
    except StructureError as exc:
        print("dag: false")
        for diag in exc.diagnostics:
            print(f"error: {diag}")
        return EXIT_STRUCTURE
    report = validate_network(net)
    print(f"nodes: {len(net.nodes)}")
    print(f"dag: {'true' if report.is_dag else 'false'}")
    print(f"polytree: {'true' if report.is_polytree else 'false'}")
    for err in report.errors:
        print(f"error: {err}")
    return EXIT_OK


def _print_apm(net: Network, w: Evidence, node: str, alts: list[int]) -> None:
    state = MomentState(net)
    for node_id, alt in w.items():
        state.assert_evidence(node_id, alt)
    mean = state.mean.posterior_batch(node)[0]
    m2 = state.second_moment_matrix(node)
    print("method apm")
    for alt in alts:
        var = state.variance(node, alt)
        flag = "  [negative variance flagged]" if var.negative else ""
        print(
            f"  alternative {alt}: mean {mean[alt]:.6f}  "
            f"second_moment {m2[alt, alt]:.6f}  variance {var.value:.6f}{flag}"
        )


def _print_mcim(
    net: Network, w: Evidence, node: str, alts: list[int], samples: int, seed: int
) -> None:
    print(f"method mcim (samples {samples}, seed {seed})")
    cfg = SampleConfig(sample_count=samples, seed=seed)
    for alt in alts:
        est = estimate_moments(net, w, node, alt, cfg)
        print(
            f"  alternative {alt}: mean {est.first.value:.6f} (se {est.first.std_error:.2e})  "
            f"second_moment {est.second.value:.6f} (se {est.second.std_error:.2e})  "
            f"variance {est.variance.value:.6f} (se {est.variance.std_error:.2e})"
        )


def _print_oracle(
    net: Network, w: Evidence, node: str, alts: list[int], points: int
) -> None:
    cfg = QuadratureConfig(points_per_dimension=points)
    print(f"method oracle (points per dimension {points})")
    for alt in alts:
        m1 = quadrature_first_moment(net, w, node, alt, cfg)
        m2 = quadrature_second_moment(net, w, node, alt, cfg)
        var = oracle_variance(net, w, node, alt, cfg)
        print(
            f"  alternative {alt}: mean {m1.value:.6f}  "
            f"second_moment {m2.value:.6f}  variance {var.value:.6f}  "
            f"(error estimate {max(m1.error_estimate, m2.error_estimate, var.error_estimate):.2e})"
        )


def cmd_variance(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        net = _load(args.path)
    except DocumentError as exc:
        return _fail(str(exc), EXIT_DOCUMENT)
    except StructureError as exc:
        return _fail(str(exc), EXIT_STRUCTURE)
    w = _parse_evidence(args.evidence, parser)
    try:
        check_evidence(net, w)
        qnode = net.node(args.node)
    except (KeyError, ValueError) as exc:
        # str(KeyError) wraps the message in an extra pair of quotes
        message = exc.args[0] if exc.args else str(exc)
        return _fail(str(message), EXIT_STRUCTURE)
    if args.node in w.assignments:
        return _fail(f"query node {args.node!r} is already instantiated", EXIT_STRUCTURE)
    if args.alt is not None and not 0 <= args.alt < qnode.alternatives:
        return _fail(
            f"alternative {args.alt} out of range for node {args.node!r}", EXIT_STRUCTURE
        )
    alts = [args.alt] if args.alt is not None else list(range(qnode.alternatives))
    methods = ["apm", "mcim", "oracle"] if args.method == "all" else [args.method]

    evidence_text = " ".join(f"{k}={v}" for k, v in w.items()) or "(none)"
    print(f"node {args.node}  evidence {evidence_text}")
    try:
        for method in methods:
            if method == "apm":
                _print_apm(net, w, args.node, alts)
            elif method == "mcim":
                _print_mcim(net, w, args.node, alts, args.samples, args.seed)
            else:
                _print_oracle(net, w, args.node, alts, args.quad_points)
    except EvidenceImpossibleError as exc:
        return _fail(str(exc), EXIT_EVIDENCE)
    except (StructureError, BudgetExceededError) as exc:
        return _fail(str(exc), EXIT_STRUCTURE)
    return EXIT_OK


def _format_number(x: float) -> str:
    return f"{x:.12g}"


def write_records(records: list[RunRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for r in records:
            writer.writerow(
                [
                    r.experiment,
                    _format_number(r.param_a),
                    _format_number(r.param_b),
                    "" if r.n is None else r.n,
                    "" if r.depth is None else r.depth,
                    r.method,
                    _format_number(r.value),
                    _format_number(r.std_error),
                    _format_number(r.wall_time_ms),
                ]
            )


def render_plot(records: list[RunRecord], target: str, path: Path) -> None:
    """Line plot of the sweep: tables over a, figure families over n/depth."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    is_table = target.startswith("table")
    if is_table:
        for method in ("prior", "apm", "mcim", "oracle"):
            rows = [r for r in records if r.method == method]
            if not rows:
                continue
            rows.sort(key=lambda r: r.param_a)
            xs = [r.param_a for r in rows]
            ys = [r.value for r in rows]
            if method == "mcim":
                ax.errorbar(xs, ys, yerr=[r.std_error for r in rows], label=method, marker="o")
            else:
                ax.plot(xs, ys, label=method, marker="o")
        ax.set_xlabel("counts a (all columns [a, a])")
        ax.set_ylabel("posterior second moment")
    else:
        xattr = "n" if target in ("fig1", "fig2") else "depth"
        a_values = sorted({r.param_a for r in records})
        colors = plt.cm.viridis([i / max(len(a_values) - 1, 1) for i in range(len(a_values))])
        for color, a in zip(colors, a_values):
            for method, style in (("apm", "-"), ("mcim", "--")):
                rows = [r for r in records if r.method == method and r.param_a == a]
                rows.sort(key=lambda r: getattr(r, xattr))
                if rows:
                    ax.plot(
                        [getattr(r, xattr) for r in rows],
                        [r.value for r in rows],
                        style,
                        color=color,
                        label=f"a={_format_number(a)} {method}",
                    )
        ax.set_xlabel("instantiated children n" if xattr == "n" else "instantiated leaf depth")
        ax.set_ylabel("posterior variance")
        ax.legend(fontsize=7, loc="best", ncol=2)
    if is_table:
        ax.legend(loc="best")
    ax.set_title(target)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_reproduce(args: argparse.Namespace) -> int:
    out = Path(args.out) if args.out else Path(f"{args.target}.csv")
    quad = QuadratureConfig(points_per_dimension=args.quad_points)
    records = run_experiment(args.target, samples=args.samples, seed=args.seed, quad=quad)
    png = out.with_suffix(".png")
    try:
        write_records(records, out)
        render_plot(records, args.target, png)
    except OSError as exc:
        return _fail(str(exc), EXIT_DOCUMENT)
    print(f"wrote {len(records)} records to {out} and plot to {png}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefvar",
        description="Posterior means and variances in singly connected belief networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a network document")
    p_val.add_argument("path")

    p_var = sub.add_parser("variance", help="posterior moments for one node")
    p_var.add_argument("path")
    p_var.add_argument("--evidence", action="append", default=[], metavar="NODE=index")
    p_var.add_argument("--node", required=True)
    p_var.add_argument("--alt", type=int, default=None)
    p_var.add_argument("--method", choices=["apm", "mcim", "oracle", "all"], default="all")
    p_var.add_argument("--samples", type=int, default=1_000_000)
    p_var.add_argument("--seed", type=int, default=0)
    p_var.add_argument("--quad-points", type=int, default=64)

    p_rep = sub.add_parser("reproduce", help="sweep a built-in experiment to CSV")
    p_rep.add_argument("target", choices=list(TARGETS))
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--samples", type=int, default=1_000_000)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--quad-points", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    if args.command == "variance":
        return cmd_variance(args, parser)
    return cmd_reproduce(args)


if __name__ == "__main__":
    sys.exit(main())

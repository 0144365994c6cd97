"""walklab command line: generate / simulate / exact / compare / sweep / replay.

Emits the CSV and JSON consumed by the test suite and by downstream plotting.
Exit codes: 0 success, 2 usage error, 3 internal or numerical error.

Per-run CSV schema: env,params,policy,seed_base,run_id,t_cover,t_hit,cap_hit
(cap_hit is 0/1, unset times are empty). Summary JSON carries env, policy,
n_runs, mean, stderr, cap_hits, plus a warning field when runs were capped.

Every file-writing invocation also writes <out>.manifest.json with the fully
resolved configuration; `replay --manifest <file>` reruns it and must
reproduce the CSV byte for byte (timestamps live only in the manifest).

Seeding: --seed sets the base seed (default 0). When the CI environment
variable is set the default is disabled and --seed becomes mandatory, so
published numbers cannot be silently irreproducible. compare and sweep
give cell (i) the base seed plus i * 1000003 to keep replications of
different policies and sweep points independent.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

from . import __version__, environments, exact_analysis
from .continuous2d import ContSimConfig, cont_monte_carlo
from .environments import EnvSpec, ParameterError
from .exact_analysis import NumericalError
from .graph_core import Graph, GraphError, dump_adjacency, eccentricity_max
from .policies import PolicySpec, RepetitionDist
from .simulator import McStats, RunResult, SimConfig, monte_carlo

_SEED_STRIDE = 1000003
_CSV_HEADER = ("env", "params", "policy", "seed_base", "run_id", "t_cover", "t_hit", "cap_hit")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# flag parsing helpers


def _coerce(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_params(items: Optional[Sequence[str]]) -> dict:
    params: dict = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects k=v, got {item!r}")
        params[key] = _coerce(value)
    return params


def parse_pdist(text: str, g: Graph) -> RepetitionDist:
    """--pdist value: 'invz' (mass proportional to 1/z up to the graph
    diameter) or explicit pairs like '1=0.5,2=0.5'."""
    if text == "invz":
        z_max = max(eccentricity_max(g), 1)
        return RepetitionDist.inverse_z(z_max)
    pairs = {}
    for chunk in text.split(","):
        key, sep, value = chunk.partition("=")
        if not sep:
            raise UsageError(f"--pdist expects invz or z=p pairs, got {text!r}")
        try:
            pairs[int(key)] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad --pdist entry {chunk!r}: {exc}") from None
    try:
        return RepetitionDist.explicit(pairs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if os.environ.get("CI"):
        raise UsageError("--seed is required when the CI environment variable is set")
    return 0


def build_graph_env(args) -> tuple[Graph, EnvSpec]:
    params = parse_params(getattr(args, "param", None))
    try:
        return environments.make(args.env, **params)
    except (ParameterError, GraphError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def build_policy(name: str, args, g: Graph, env: EnvSpec) -> PolicySpec:
    if name in ("rw", "nf"):
        return PolicySpec(name)
    if name == "local-nf":
        anchor = getattr(args, "anchor", None)
        if anchor is None:
            anchor = env.start
        if anchor is None:
            raise UsageError("local-nf needs --anchor on environments without a fixed start")
        if not 0 <= anchor < g.m:
            raise UsageError(f"--anchor {anchor} out of range for {g.m} nodes")
        return PolicySpec("local-nf", anchor=anchor)
    if name == "persistent":
        dist = parse_pdist(getattr(args, "pdist", None) or "invz", g)
        return PolicySpec("persistent", dist=dist)
    raise UsageError(f"unknown policy {name!r}")


# ---------------------------------------------------------------------------
# output helpers


def _fmt_opt(value) -> str:
    return "" if value is None else str(value)


def write_runs_csv(
    path: str,
    env_name: str,
    params_desc: str,
    policy_label: str,
    seed_base: int,
    rows: Sequence[RunResult],
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for r in rows:
            writer.writerow(
                (
                    env_name,
                    params_desc,
                    policy_label,
                    seed_base,
                    r.run_id,
                    _fmt_opt(r.t_cover),
                    _fmt_opt(r.t_hit),
                    int(r.cap_hit),
                )
            )


def summary_dict(env_name: str, policy_label: str, stats: McStats) -> dict:
    out = {
        "env": env_name,
        "policy": policy_label,
        "n_runs": stats.n_runs,
        "mean": stats.mean,
        "stderr": stats.stderr,
        "cap_hits": stats.cap_hits,
    }
    if stats.cap_hits:
        out["warning"] = f"{stats.cap_hits} runs hit the step cap and were excluded from the stats"
    return out


def write_manifest(out_prefix: str, command: str, config: dict, outputs: list[str]) -> str:
    manifest = {
        "tool": "walklab",
        "version": __version__,
        "command": command,
        "config": config,
        "seed_base": config.get("seed"),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    path = out_prefix + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def _dump_json(obj: dict) -> None:
    print(json.dumps(obj))


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    g, _ = build_graph_env(args)
    sys.stdout.write(dump_adjacency(g))
    return 0


def _cont_params_desc(config: ContSimConfig) -> str:
    parts = [f"D={config.D}", f"M={config.M}", f"motion={config.motion}"]
    if config.delta is not None:
        parts.append(f"delta={config.delta}")
    return ";".join(sorted(parts))


def _run_cont(args, seed: int) -> tuple[McStats, list[RunResult], str, str]:
    policy = args.policy or "uniform"
    if policy not in ("uniform", "approx-nf"):
        raise UsageError(f"cont2d policy must be uniform or approx-nf, got {policy!r}")
    config = ContSimConfig(
        D=args.D,
        M=args.M,
        policy=policy,
        motion=args.motion,
        n_runs=args.runs,
        seed_base=seed,
        step_cap=args.step_cap if args.step_cap is not None else 10 ** 7,
        delta=args.delta,
    )
    stats, rows = cont_monte_carlo(config, workers=args.workers)
    return stats, rows, policy, _cont_params_desc(config)


def _run_graph(args, seed: int, policy_name: str, seed_offset: int = 0) -> tuple[McStats, list[RunResult], str, str]:
    g, env = build_graph_env(args)
    pspec = build_policy(policy_name, args, g, env)
    config = SimConfig(
        env=env,
        policy=pspec,
        n_runs=args.runs,
        seed_base=seed + seed_offset,
        step_cap=args.step_cap,
        quantity=args.quantity,
    )
    stats, rows = monte_carlo(config, workers=args.workers)
    return stats, rows, pspec.describe(), env.describe_params()


def _simulate_config_dict(args, seed: int) -> dict:
    return {
        "env": args.env,
        "param": list(args.param or ()),
        "policy": args.policy,
        "runs": args.runs,
        "seed": seed,
        "step_cap": args.step_cap,
        "quantity": args.quantity,
        "workers": args.workers,
        "anchor": getattr(args, "anchor", None),
        "pdist": getattr(args, "pdist", None),
        "D": getattr(args, "D", None),
        "M": getattr(args, "M", None),
        "motion": getattr(args, "motion", None),
        "delta": getattr(args, "delta", None),
        "out": args.out,
    }


def cmd_simulate(args) -> int:
    seed = resolve_seed(args)
    if args.env == "cont2d":
        if args.quantity != "cover":
            raise UsageError("cont2d supports only --quantity cover")
        stats, rows, label, params_desc = _run_cont(args, seed)
    else:
        if args.policy is None:
            raise UsageError("--policy is required")
        stats, rows, label, params_desc = _run_graph(args, seed, args.policy)
    summary = summary_dict(args.env, label, stats)
    if args.out:
        csv_path = args.out + ".csv"
        write_runs_csv(csv_path, args.env, params_desc, label, seed, rows)
        summary_path = args.out + ".summary.json"
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        write_manifest(args.out, "simulate", _simulate_config_dict(args, seed), [csv_path, summary_path])
    _dump_json(summary)
    return 0


def cmd_exact(args) -> int:
    g, env = build_graph_env(args)
    quantity = args.quantity
    if quantity == "rw-hitting":
        if env.start is None or env.target is None:
            raise UsageError(f"{args.env} has no start/target pair for rw-hitting")
        value = exact_analysis.hitting_times_rw(g, env.target)[env.start]
        kind = "exact"
    elif quantity in ("rw-cover", "nf-cover"):
        policy = "rw" if quantity == "rw-cover" else "nf"
        try:
            form = exact_analysis.closed_form(env, policy)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        value, kind = form.value, form.kind
    elif quantity == "persistent-t0":
        if env.kind != "toy_maze":
            raise UsageError("persistent-t0 is defined on the toy_maze environment only")
        if args.a is None:
            raise UsageError("persistent-t0 needs --a (repeat-once probability)")
        try:
            value = exact_analysis.persistent_toy_T0(args.a)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        kind = "exact"
    else:
        raise UsageError(
            f"unsupported quantity {quantity!r}; pick one of "
            "rw-hitting, rw-cover, nf-cover, persistent-t0"
        )
    _dump_json({"env": args.env, "quantity": quantity, "kind": kind, "value": value})
    return 0


def _policy_list(text: Optional[str]) -> list[str]:
    if not text:
        raise UsageError("--policy is required")
    return [p.strip() for p in text.split(",") if p.strip()]


def _dedupe_labels(labels: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for label in labels:
        seen[label] = seen.get(label, 0) + 1
        out.append(label if seen[label] == 1 else f"{label}#{seen[label]}")
    return out


def cmd_compare(args) -> int:
    seed = resolve_seed(args)
    names = _policy_list(args.policy)
    if len(names) < 2:
        raise UsageError("compare needs at least two policies")
    stats_list: list[McStats] = []
    labels: list[str] = []
    for i, name in enumerate(names):
        stats, _, label, _ = _run_graph(args, seed, name, seed_offset=i * _SEED_STRIDE)
        stats_list.append(stats)
        labels.append(label)
    labels = _dedupe_labels(labels)

    def z_score(a: McStats, b: McStats) -> float:
        denom = math.sqrt(a.stderr ** 2 + b.stderr ** 2)
        if denom == 0.0:
            return 0.0 if a.mean == b.mean else math.inf
        return (a.mean - b.mean) / denom

    header = ["policy", "n_runs", "mean", "stderr", "cap_hits"] + [f"z_vs_{lb}" for lb in labels]
    lines = []
    for i, (label, st) in enumerate(zip(labels, stats_list)):
        row = [label, st.n_runs, st.mean, st.stderr, st.cap_hits]
        row += ["" if j == i else z_score(st, stats_list[j]) for j in range(len(labels))]
        lines.append(row)
    _write_or_print_table(args.out, header, lines, "compare", args, seed)
    return 0


def _write_or_print_table(out_prefix, header, lines, command, args, seed) -> None:
    if out_prefix:
        csv_path = out_prefix + ".csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(lines)
        config = _simulate_config_dict(args, seed)
        config["sweep"] = getattr(args, "sweep", None)
        write_manifest(out_prefix, command, config, [csv_path])
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(lines)


def _sweep_values(text: str) -> tuple[str, list]:
    key, sep, values = text.partition("=")
    if not sep or not values:
        raise UsageError(f"--sweep expects k=v1,v2,..., got {text!r}")
    return key, [_coerce(v) for v in values.split(",")]


def _apply_sweep_value(args, key: str, value) -> None:
    """Set one sweep point by rewriting the repeatable --param list."""
    base = [p for p in (args.param or ()) if not p.startswith(key + "=")]
    if args.env in ("grid2d", "grid3d") and key == "grid":
        # convenience key for square grids
        dims = ("n1", "n2") if args.env == "grid2d" else ("n1", "n2", "n3")
        base = [p for p in base if p.partition("=")[0] not in dims]
        base += [f"{d}={value}" for d in dims]
    else:
        base.append(f"{key}={value}")
    args.param = base


def cmd_sweep(args) -> int:
    seed = resolve_seed(args)
    key, values = _sweep_values(args.sweep)
    names = _policy_list(args.policy)
    header = ["param", "param_value", "policy", "n_runs", "mean", "stderr", "cap_hits"]
    lines = []
    cell = 0
    for value in values:
        for name in names:
            if args.env == "cont2d":
                if key not in ("M", "D"):
                    raise UsageError("cont2d sweeps support M or D")
                cont_args = argparse.Namespace(**vars(args))
                setattr(cont_args, key, value)
                cont_args.policy = name
                stats, _, label, _ = _run_cont(cont_args, seed + cell * _SEED_STRIDE)
            else:
                _apply_sweep_value(args, key, value)
                stats, _, label, _ = _run_graph(args, seed, name, seed_offset=cell * _SEED_STRIDE)
            lines.append([key, value, label, stats.n_runs, stats.mean, stats.stderr, stats.cap_hits])
            cell += 1
    _write_or_print_table(args.out, header, lines, "sweep", args, seed)
    return 0


def cmd_replay(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    if manifest.get("tool") != "walklab":
        raise UsageError("not a walklab manifest")
    config = manifest.get("config", {})
    command = manifest.get("command")
    handlers = {"simulate": cmd_simulate, "compare": cmd_compare, "sweep": cmd_sweep}
    if command not in handlers:
        raise UsageError(f"manifest command {command!r} is not replayable")
    replay_args = argparse.Namespace(**config)
    if args.out:
        replay_args.out = args.out
    return handlers[command](replay_args)


# ---------------------------------------------------------------------------
# parser wiring


def _add_env_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", required=True, help="environment kind, or cont2d")
    p.add_argument("--param", action="append", metavar="k=v", help="environment parameter, repeatable")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", help="policy name; compare/sweep accept a comma list")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step-cap", dest="step_cap", type=int, default=None)
    p.add_argument("--out", help="output prefix; writes <out>.csv plus summary and manifest")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quantity", choices=("cover", "hitting"), default="cover")
    p.add_argument("--anchor", type=int, default=None, help="anchor node for local-nf")
    p.add_argument("--pdist", default=None, help="persistent repeat distribution: invz or 1=0.5,2=0.5")
    p.add_argument("--D", type=float, default=5.0, help="cont2d domain size")
    p.add_argument("--M", type=int, default=10, help="cont2d cells per side")
    p.add_argument("--motion", choices=("brownian", "levy"), default="brownian")
    p.add_argument("--delta", type=float, default=None, help="cont2d kernel half-width (default D/M)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walklab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"walklab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="print an environment's adjacency list")
    _add_env_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="Monte Carlo runs of one (env, policy)")
    _add_env_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="closed-form and linear-solve values")
    _add_env_flags(p)
    p.add_argument("--quantity", required=True)
    p.add_argument("--a", type=float, default=None, help="persistent-t0 repeat-once probability")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("compare", help="per-policy stats with pairwise z-scores")
    _add_env_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="stats over a parameter grid, long CSV")
    _add_env_flags(p)
    _add_run_flags(p)
    p.add_argument("--sweep", required=True, metavar="k=v1,v2,...")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="rerun a manifest and reproduce its outputs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="override the output prefix")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

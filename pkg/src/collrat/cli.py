"""Command-line interface.

Subcommands: check, project, vertices, nesting, ranking, test,
subsample-test, lr-test, mc, volume, scan, split-test. Global options set
the master seed (COLLRAT_SEED as fallback), a JSON config with defaults,
and the output sink/format. Exit codes: 0 ok, 1 usage, 2 data, 3 resource
cap, 4 solver failure.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import collective, difficulty, inference, io as io_mod, simulate, vertices as vertices_mod
from .core import ChoiceVector, LinearOrder
from .errors import ArgumentError, CollratError, DataError, ResourceLimitError, SolverError


def _parse_vector(text: str) -> ChoiceVector:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ArgumentError(f"cannot parse vector {text!r}") from None
    return ChoiceVector.from_values(np.array(values))


def _emit(ctx, obj):
    fmt = ctx.obj.get("format", "json")
    out = ctx.obj.get("out")
    text = io_mod.emit_report(obj, fmt=fmt, path=out)
    if out is None:
        click.echo(text)


def _seed(ctx) -> int:
    return ctx.obj["seed"]


def _cfg(ctx, key, fallback):
    return ctx.obj.get("config", {}).get(key, fallback)


@click.group()
@click.option("--seed", type=int, default=None, help="Master RNG seed (default: COLLRAT_SEED or 0).")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config with defaults.")
@click.option("--out", type=click.Path(), default=None, help="Write the report here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="json")
@click.pass_context
def cli(ctx, seed, config_path, out, fmt):
    """Rationalizability tests for binary stochastic choice with heterogeneity."""
    ctx.ensure_object(dict)
    cfg = io_mod.load_config(config_path) if config_path else {}
    if seed is None:
        env = os.environ.get("COLLRAT_SEED")
        seed = int(env) if env else int(cfg.get("seed", 0))
    ctx.obj.update({"seed": seed, "config": cfg, "out": out, "format": fmt})


@cli.command()
@click.option("--model", required=True, type=click.Choice(["css", "cmu", "cwu", "ru"]))
@click.option("--vector", required=True, help="Comma-separated pair probabilities, canonical order.")
@click.option("--method", type=click.Choice(["auto", "balas", "vertex", "facet"]), default="auto")
@click.pass_context
def check(ctx, model, vector, method):
    """Collective membership of a choice vector: {member, distance, witness?}."""
    rho = _parse_vector(vector)
    witness = None
    if model == "ru":
        member, nu = collective.ru_membership(rho)
        if nu is not None:
            witness = {"order_weights": {"-".join(map(str, k)): w for k, w in nu.items()}}
    elif method == "balas" or (method == "auto" and rho.n <= 4):
        member, wit = collective.membership_balas(rho, model)
        if wit is not None:
            witness = {
                "types": [
                    {"weight": w, "rho": list(r), "label": lab}
                    for w, r, lab in wit.population()
                ]
            }
    elif method == "facet":
        member = collective.facet_check_n3(rho, model)
    else:
        member, w = collective.membership_vertex(rho, model)
        if w is not None:
            witness = {"vertex_weights": [float(x) for x in w]}
    if model == "ru":
        dist = 0.0 if member else float("nan")
    else:
        dist = collective.project(rho, model).distance
    payload = {"model": model, "member": bool(member), "distance": dist}
    if witness is not None:
        payload["witness"] = witness
    _emit(ctx, payload)


@cli.command("project")
@click.option("--model", required=True, type=click.Choice(["css", "cmu", "cwu"]))
@click.option("--vector", required=True)
@click.option("--method", type=click.Choice(["auto", "facet", "vertex"]), default="auto")
@click.pass_context
def project_cmd(ctx, model, vector, method):
    """Euclidean projection onto the collective hull."""
    rho = _parse_vector(vector)
    res = collective.project(rho, model, method=method)
    _emit(
        ctx,
        {
            "model": model,
            "projected": [float(v) for v in res.projected],
            "distance": res.distance,
            "active": list(res.active),
            "method": res.method,
        },
    )


@cli.command("vertices")
@click.option("--model", required=True, type=click.Choice(["ss", "mu", "wu", "ru", "css", "cmu", "cwu"]))
@click.option("--n", required=True, type=int)
@click.option("--order", default=None, help="Restrict to one preference order, e.g. 1,2,3 (best first).")
@click.pass_context
def vertices_cmd(ctx, model, n, order):
    """Hull-generating vertex set on the {0, 1/2, 1} grid."""
    restrict = None
    if order:
        restrict = LinearOrder.from_preference([int(v) for v in order.split(",")])
    vs = vertices_mod.enumerate_vertices(model, n, order=restrict)
    import json as _json

    payload = _json.loads(vs.to_json())
    payload["count"] = len(vs)
    _emit(ctx, payload)


@cli.command()
@click.option("--n", required=True, type=int)
@click.pass_context
def nesting(ctx, n):
    """Hull containments between the RU/SS/MU/WU vertex sets."""
    rep = vertices_mod.verify_nesting(n)
    payload = {
        "n": n,
        "conv_ss_eq_conv_mu": rep.conv_ss_eq_conv_mu,
        "ru_subset_css": rep.ru_subset_css,
        "containments": {
            f"{a}->{b}": {
                "contained": r.contained,
                "lp_checked": r.lp_checked,
                "exact_lookups": r.exact_lookups,
                "witness_doubled": list(r.witness) if r.witness else None,
            }
            for (a, b), r in rep.containments.items()
        },
    }
    _emit(ctx, payload)


@cli.command()
@click.option("--loop", required=True, help="Directed loop rates, e.g. 0.6,0.55,0.35")
@click.option("--pi", "pi_text", required=True, help="Difficulty ranks per loop pair, e.g. 1,3,2")
@click.pass_context
def ranking(ctx, loop, pi_text):
    """Single-agent rationalizability of a loop under a given difficulty ranking."""
    rates = tuple(float(v) for v in loop.split(","))
    ranks = tuple(int(v) for v in pi_text.split(","))
    verdict = difficulty.wu_loop_with_ranking(
        difficulty.LoopChoice(rates), difficulty.RankingFunction(ranks)
    )
    _emit(ctx, verdict.to_dict())


@cli.command()
@click.argument("data_path", type=click.Path())
@click.option("--model", default="css", type=click.Choice(["css", "cmu", "cwu"]))
@click.option("--alpha", type=float, default=None)
@click.option("--eps-rule", default=None, help="'n13', 'n16', or a float step size.")
@click.option("--boot", type=int, default=None)
@click.option("--anonymous", is_flag=True, help="Ignore subject ids (singleton-response bootstrap).")
@click.pass_context
def test(ctx, data_path, model, alpha, eps_rule, boot, anonymous):
    """Numerical-delta bootstrap test of collective rationalizability on a CSV panel."""
    data = io_mod.parse_responses(data_path)
    alpha = alpha if alpha is not None else float(_cfg(ctx, "alpha", 0.05))
    eps_rule = eps_rule if eps_rule is not None else _cfg(ctx, "eps_rule", "n13")
    boot = boot if boot is not None else int(_cfg(ctx, "boot", inference.DEFAULT_BOOT))
    try:
        eps_rule = float(eps_rule)
    except (TypeError, ValueError):
        pass
    fn = inference.anonymous_aggregate_and_test if anonymous else inference.numerical_delta_test
    res = fn(data, model, alpha, eps_rule, boot, seed=_seed(ctx))
    _emit(ctx, res)


@cli.command("subsample-test")
@click.argument("data_path", type=click.Path())
@click.option("--model", default="css", type=click.Choice(["css", "cmu", "cwu"]))
@click.option("--alpha", type=float, default=0.05)
@click.option("--b", "b_size", type=int, default=None, help="Subsample size (default floor(N^(2/3))).")
@click.option("--draws", type=int, default=1000)
@click.pass_context
def subsample_test_cmd(ctx, data_path, model, alpha, b_size, draws):
    """Subsampling-based test (pointwise valid alternative to the bootstrap)."""
    data = io_mod.parse_responses(data_path)
    res = inference.subsample_test(data, model, alpha, b_size, seed=_seed(ctx), n_draws=draws)
    _emit(ctx, res)


@cli.command("lr-test")
@click.argument("data_path", type=click.Path())
@click.pass_context
def lr_test(ctx, data_path):
    """Likelihood-ratio screen: do all subjects share one preference-sign pattern?"""
    data = io_mod.parse_responses(data_path)
    _emit(ctx, inference.lr_heterogeneity_test(data))


@cli.command()
@click.option("--dgp", required=True, help="Benchmark mean, e.g. table1:mu0")
@click.option("--regime", default="independent", type=click.Choice(list(simulate.REGIMES)))
@click.option("--n", "n_subjects", type=int, default=500)
@click.option("--reps", type=int, default=500)
@click.option("--alpha", type=float, default=0.05)
@click.option("--eps", default="n13")
@click.option("--boot", type=int, default=2000)
@click.option("--model", default="css", type=click.Choice(["css", "cmu", "cwu"]))
@click.pass_context
def mc(ctx, dgp, regime, n_subjects, reps, alpha, eps, boot, model):
    """Monte Carlo rejection rate of the bootstrap test under a benchmark design."""
    name = dgp.split(":", 1)[1] if dgp.startswith("table1:") else dgp
    spec = simulate.benchmark_dgp(name, regime=regime)
    try:
        eps = float(eps)
    except ValueError:
        pass
    res = simulate.rejection_rate(
        spec, n_subjects, reps, model, alpha, eps, boot, seed=_seed(ctx)
    )
    _emit(ctx, res)


@cli.command()
@click.option("--model", required=True, type=click.Choice(["ss", "mu", "wu", "css", "cmu", "cwu"]))
@click.option("--n", required=True, type=int)
@click.option("--method", default="auto", type=click.Choice(["auto", "exact", "monte_carlo"]))
@click.option("--samples", type=float, default=1e7)
@click.pass_context
def volume(ctx, model, n, method, samples):
    """Relative volume of a rationalizable set."""
    res = simulate.volume(model, n, method, samples=int(samples), seed=_seed(ctx))
    _emit(ctx, res)


@cli.command()
@click.argument("data_path", type=click.Path())
@click.option("--sizes", default="3,4,5")
@click.option("--models", default="ss,mu,wu,css")
@click.pass_context
def scan(ctx, data_path, sizes, models):
    """Violation rates over all option subsets of the given sizes."""
    data = io_mod.parse_responses(data_path)
    reports = io_mod.scan_subsets(
        data,
        sizes=tuple(int(s) for s in sizes.split(",")),
        models=tuple(m.strip() for m in models.split(",")),
    )
    _emit(ctx, reports)


@cli.command("split-test")
@click.argument("data_path", type=click.Path())
@click.option("--model", default="css", type=click.Choice(["css", "cmu", "cwu"]))
@click.option("--alpha", type=float, default=0.05)
@click.option("--sizes", default="3,4,5")
@click.option("--split", type=float, default=0.5)
@click.option("--boot", type=int, default=2000)
@click.pass_context
def split_test(ctx, data_path, model, alpha, sizes, split, boot):
    """Sample splitting: flag violating subsets on one half, test them on the other."""
    data = io_mod.parse_responses(data_path)
    res = inference.sample_split_test(
        data,
        model,
        alpha,
        sizes=tuple(int(s) for s in sizes.split(",")),
        split_fraction=split,
        seed=_seed(ctx),
        n_boot=boot,
    )
    _emit(ctx, res)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except ArgumentError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except ResourceLimitError as exc:
        click.echo(f"resource limit: {exc}", err=True)
        return 3
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return 4
    except CollratError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

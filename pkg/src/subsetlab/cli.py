"""Command-line front end.

Subcommands mirror the library surface: design construction and omega
reports, dataset sampling, single-shot estimation, bound calculators, KL and
chi-square checks, restricted-eigenvalue certification, sweeps, bound
verification, gap experiments, and plot-script emission.

All user-facing indices are 1-based; matrices read and written by the CLI use
plain UTF-8 text (square covariance files start with ``d``; rectangular data
matrices start with ``n d``).  Exit codes: 0 success, 2 configuration error,
3 enumeration budget exceeded, 1 any other handled failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .design import (
    DEFAULT_PAIR_BUDGET,
    compute_omega_known,
    compute_omega_unknown,
    load_covariance,
    make_equicorrelation,
    make_identity,
    make_two_by_two,
    save_matrix,
)
from .errors import BudgetExceededError, ConfigError, SubsetLabError
from .estimators import (
    EstimatorSpec,
    build_engine,
    default_tau,
    rss,
    run_estimator,
)
from .harness import (
    emit_csv,
    emit_plot_script,
    load_config,
    read_sweep_csv,
    run_gap_experiment,
    run_phase_sweep,
    verify_bounds,
)
from .restricted import check_src, evaluate_gap, re_constant
from .sampler import ClassParams, make_beta, make_instance, read_dataset_csv, sample_dataset, write_dataset_csv
from .subsets import SupportSet
from .theory import (
    bound_lower_dimension,
    bound_lower_equicorr,
    bound_lower_unknown,
    bound_upper_generic,
    bound_upper_known,
    bound_upper_unknown,
    chisq_tail_bound,
    empirical_chisq_tail,
    kl_between_supports,
)


def _print_support(support: SupportSet) -> str:
    return ",".join(str(j + 1) for j in support.indices)


def _parse_indices_1based(raw: str) -> SupportSet:
    items = [int(v) for v in raw.split(",") if v.strip()]
    if any(j < 1 for j in items):
        raise ConfigError(f"indices are 1-based, got {raw!r}")
    return SupportSet.of(j - 1 for j in items)


def _parse_beta_spec(raw: str, d: int) -> np.ndarray:
    """Parse ``support=1,3;values=1,-1`` or ``support=1,3;betamin=1``."""
    fields: dict[str, str] = {}
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"bad beta spec fragment {part!r}")
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    if "support" not in fields:
        raise ConfigError("beta spec needs a support=... field")
    support = _parse_indices_1based(fields["support"])
    if "values" in fields:
        values = [float(v) for v in fields["values"].split(",") if v.strip()]
    elif "betamin" in fields:
        values = [float(fields["betamin"])] * len(support)
    else:
        raise ConfigError("beta spec needs values=... or betamin=...")
    return make_beta(d, support, values)


def _load_x_matrix(path: str) -> np.ndarray:
    """Rectangular data matrix: first line ``n d``, then n rows."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"{path}: empty matrix file")
    head = lines[0].split()
    if len(head) != 2:
        raise ConfigError(f"{path}: first line must be 'n d', got {lines[0]!r}")
    n, d = int(head[0]), int(head[1])
    if len(lines) - 1 != n:
        raise ConfigError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != d:
            raise ConfigError(f"{path}: row with {len(parts)} entries, expected {d}")
        rows.append([float(p) for p in parts])
    return np.array(rows)


def _cmd_gen_design(args) -> int:
    if args.kind == "identity":
        cov = make_identity(args.d)
    elif args.kind == "equicorr":
        if args.omega is None:
            raise ConfigError("--omega is required for equicorr designs")
        cov = make_equicorrelation(args.d, args.omega)
    elif args.kind == "twobytwo":
        if args.b is None:
            raise ConfigError("--b is required for twobytwo designs")
        cov = make_two_by_two(args.b)
    else:
        if args.infile is None:
            raise ConfigError("--in is required for file designs")
        cov = load_covariance(args.infile)
    save_matrix(cov.entries, args.out)
    print(f"wrote {cov.dim}x{cov.dim} covariance [{cov.tag.describe()}] to {args.out}")
    return 0


def _cmd_omega(args) -> int:
    cov = load_covariance(args.design)
    if args.s is None and args.sbar is None:
        raise ConfigError("provide --s (exact size) and/or --sbar (size bound)")
    if args.s is not None:
        rep = compute_omega_known(cov, args.s, pair_budget=args.pair_budget)
        print(
            f"omega(known, s={args.s}) = {rep.omega!r}  witness S={{{_print_support(rep.witness_s)}}} "
            f"T={{{_print_support(rep.witness_t)}}}  pairs={rep.pairs_scanned}"
        )
    if args.sbar is not None:
        rep = compute_omega_unknown(cov, args.sbar, pair_budget=args.pair_budget)
        print(
            f"omega(unknown, sbar={args.sbar}) = {rep.omega!r}  witness S={{{_print_support(rep.witness_s)}}} "
            f"T={{{_print_support(rep.witness_t)}}}  pairs={rep.pairs_scanned}"
        )
    return 0


def _cmd_sample(args) -> int:
    cov = load_covariance(args.design)
    beta = _parse_beta_spec(args.beta, cov.dim)
    instance = make_instance(beta, args.sigma2, cov)
    data = sample_dataset(instance, args.n, args.seed)
    write_dataset_csv(data, args.out)
    print(f"wrote {data.n} samples of dimension {data.dim} to {args.out} (seed {args.seed})")
    return 0


def _cmd_estimate(args) -> int:
    data = read_dataset_csv(args.data)
    kind = args.method
    if kind in ("bss", "lasso", "omp", "marginal"):
        if args.s is None:
            raise ConfigError(f"--s is required for {kind}")
        spec = EstimatorSpec(kind, s=args.s)
    elif kind in ("aic", "bic"):
        if args.sbar is None:
            raise ConfigError(f"--sbar is required for {kind}")
        spec = EstimatorSpec(kind, sbar=args.sbar)
    else:
        if args.sbar is None:
            raise ConfigError("--sbar is required for bssu")
        tau = args.tau
        if tau is None:
            if args.omega is None or args.betamin is None:
                raise ConfigError("bssu needs --tau or both --omega and --betamin")
            tau = default_tau(args.omega, args.betamin)
        spec = EstimatorSpec(kind, sbar=args.sbar, tau=tau)
    support = run_estimator(spec, data)
    engine = build_engine(data)
    residual = rss(engine, support)
    if kind == "bss":
        objective = residual
    elif kind == "bssu":
        objective = residual / (data.n - len(support)) + len(support) * spec.tau
    elif kind == "aic":
        objective = residual / data.n + len(support) * 2.0 / data.n
    elif kind == "bic":
        objective = residual / data.n + len(support) * np.log(data.n) / data.n
    else:
        objective = residual
    print(f"support: {_print_support(support) or '(empty)'}")
    print(f"objective: {objective!r}")
    return 0


def _cmd_bounds(args) -> int:
    if args.kind in ("upper-known", "upper-unknown", "lower-equicorr"):
        if args.omega is None:
            raise ConfigError(f"--omega is required for {args.kind}")
        params = ClassParams(
            d=args.d,
            beta_min=args.betamin,
            omega=args.omega,
            sigma2=args.sigma2,
            known_sparsity=args.kind != "upper-unknown",
            s=args.s if args.kind != "upper-unknown" else None,
            sbar=args.sbar if args.kind == "upper-unknown" else None,
        )
    if args.kind == "upper-known":
        report = bound_upper_known(params, args.delta, constant=args.constant)
    elif args.kind == "upper-unknown":
        report = bound_upper_unknown(params, args.delta, constant=args.constant)
    elif args.kind == "upper-generic":
        if args.signal is None:
            raise ConfigError("--signal is required for upper-generic")
        report = bound_upper_generic(args.signal, args.d, args.s, args.delta, constant=args.constant)
    elif args.kind == "lower-equicorr":
        report = bound_lower_equicorr(params, args.delta)
    elif args.kind == "lower-dim":
        report = bound_lower_dimension(args.d, args.s, args.betamin**2 / args.sigma2, args.delta)
    else:
        if args.omega is None:
            raise ConfigError("--omega is required for lower-unknown")
        report = bound_lower_unknown(args.d, args.betamin, args.omega, args.sigma2, args.delta)
    floor = f"  error_floor={report.error_floor!r}" if report.error_floor is not None else ""
    print(f"{report.kind}: n = {report.n_value!r}  (delta={report.delta_confidence}, constant={report.constant_used}){floor}")
    return 0


def _cmd_kl(args) -> int:
    cov = load_covariance(args.design)
    s_set = _parse_indices_1based(args.s_set)
    t_set = _parse_indices_1based(args.t_set)
    beta_s = [float(v) for v in args.beta_s.split(",") if v.strip()]
    beta_t = [float(v) for v in args.beta_t.split(",") if v.strip()]
    value = kl_between_supports(cov, s_set, np.array(beta_s), t_set, np.array(beta_t), args.sigma2)
    print(f"kl = {value!r}")
    return 0


def _cmd_chisq_check(args) -> int:
    bound = chisq_tail_bound(args.m, args.t)
    line = f"m={args.m} t={args.t}: bound = {bound!r}"
    if args.trials:
        est = empirical_chisq_tail(args.m, args.t, args.trials, seed=args.seed)
        line += f"  empirical = {est.probability!r} (stderr {est.stderr:.3g}, {est.trials} trials)"
    print(line)
    return 0


def _cmd_re(args) -> int:
    x = _load_x_matrix(args.x)
    cert = re_constant(
        x,
        args.s,
        restarts=args.restarts,
        iters=args.iters,
        seed=args.seed,
        sample_supports=args.sample_supports,
    )
    mode = "sampled" if cert.sampled_supports else "enumerated"
    print(
        f"gamma_upper = {cert.gamma_upper!r}  witness support {{{_print_support(cert.witness_s)}}} "
        f"({mode} supports, restarts={cert.restarts_used}, converged={cert.converged})"
    )
    return 0


def _cmd_gap(args) -> int:
    if args.config is not None:
        config = load_config(args.config)
        sweeps = run_gap_experiment(config, threads=args.threads)
        base = args.out or config.out_path or "gap.csv"
        for sweep in sweeps:
            stem, dot, ext = base.rpartition(".")
            path = f"{stem}_omega{sweep.omega}{dot}{ext}" if dot else f"{base}_omega{sweep.omega}"
            emit_csv(sweep.result, path)
            print(f"omega={sweep.omega}: wrote {path}")
        return 0
    if args.x is None or args.beta is None or args.s is None:
        raise ConfigError("gap needs either --config or (--x, --beta, --s)")
    x = _load_x_matrix(args.x)
    beta = _parse_beta_spec(args.beta, x.shape[1])
    instance = make_instance(beta, args.sigma2, _empirical_design(x))
    gamma = args.gamma
    if gamma is None:
        cert = re_constant(x, args.s, restarts=args.restarts, iters=args.iters, seed=args.seed)
        gamma = cert.gamma_upper
        print(f"certified gamma_upper = {gamma!r}")
    report = evaluate_gap(x, instance, gamma)
    print(f"enumerative-optimal term : {report.optimal_term!r}")
    print(f"poly-efficient floor     : {report.poly_term!r}")
    print(f"gap ratio                : {report.ratio!r}")
    print(
        f"(delta_l={report.signals.delta_l!r}, delta_u={report.signals.delta_u!r}, gamma={gamma!r})"
    )
    return 0


def _empirical_design(x: np.ndarray):
    """PD-repaired empirical covariance so fixed-design ops can reuse instance plumbing."""
    from .design import Covariance, CovarianceTag

    n = x.shape[0]
    a = x.T @ x / n
    a = (a + a.T) / 2.0
    eigmin = float(np.min(np.linalg.eigvalsh(a)))
    if eigmin < 1e-10:
        a = a + (1e-10 - eigmin) * np.eye(a.shape[0])
    return Covariance(a.shape[0], a, CovarianceTag("from_file", path="<empirical>"))


def _cmd_src(args) -> int:
    x = _load_x_matrix(args.x)
    report = check_src(x, args.s, args.c_minus, args.c_plus, budget=args.budget, seed=args.seed)
    status = {True: "holds", False: "violated", None: "no violation found (sampled; cannot certify)"}
    print(f"src: {status[report.holds]}")
    print(
        f"worst low ratio  {report.worst_ratio_low!r} at T={{{','.join(str(i + 1) for i in report.witness_low.support)}}} u={report.witness_low.direction}"
    )
    print(
        f"worst high ratio {report.worst_ratio_high!r} at T={{{','.join(str(i + 1) for i in report.witness_high.support)}}} u={report.witness_high.direction}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    result = run_phase_sweep(config, threads=args.threads)
    out = args.out or config.out_path
    if out is None:
        raise ConfigError("no output path: set out.path in the config or pass --out")
    emit_csv(result, out)
    print(f"wrote {len(result.rows)} rows to {out} (config {result.config_hash})")
    if result.failures:
        for kind, n, count in result.failures:
            print(f"note: {count} failed trials for {kind} at n={n} (counted as non-recovery)")
    return 0


def _cmd_verify_bounds(args) -> int:
    config = load_config(args.config)
    rows = verify_bounds(config, threads=args.threads)
    print("omega,empirical_n_star,upper_known,lower_equicorr,lower_dimension,calibrated_constant")
    for row in rows:
        lower_eq = "" if row.lower_equicorr is None else repr(row.lower_equicorr)
        print(
            f"{row.omega},{row.empirical_n_star},{row.upper_known!r},{lower_eq},"
            f"{row.lower_dimension!r},{row.calibrated_constant!r}"
        )
    return 0


def _cmd_plot(args) -> int:
    read_sweep_csv(args.result)  # validate before emitting a script against it
    emit_plot_script(args.result, args.out)
    print(f"wrote plot script to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsetlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"subsetlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-design", help="construct a design covariance file")
    p.add_argument("--kind", required=True, choices=["identity", "equicorr", "twobytwo", "file"])
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_design)

    p = sub.add_parser("omega", help="exact conditional-covariance floor of a design")
    p.add_argument("--design", required=True)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--sbar", type=int, default=None)
    p.add_argument("--pair-budget", type=int, default=DEFAULT_PAIR_BUDGET)
    p.set_defaults(func=_cmd_omega)

    p = sub.add_parser("sample", help="draw a dataset from a ground-truth instance")
    p.add_argument("--design", required=True)
    p.add_argument("--beta", required=True, help="support=1,3;values=1,-1 or support=1,3;betamin=1")
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="run one support estimator on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=["bss", "bssu", "aic", "bic", "lasso", "omp", "marginal"])
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--sbar", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--betamin", type=float, default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bounds", help="evaluate a sample-size formula")
    p.add_argument(
        "--kind",
        required=True,
        choices=["upper-known", "upper-generic", "upper-unknown", "lower-equicorr", "lower-dim", "lower-unknown"],
    )
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--sbar", type=int, default=None)
    p.add_argument("--betamin", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--constant", type=float, default=1.0)
    p.add_argument("--signal", type=float, default=None, help="minimum scaled signal (upper-generic)")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("kl", help="exact KL divergence between two support models")
    p.add_argument("--design", required=True)
    p.add_argument("--s-set", required=True)
    p.add_argument("--beta-s", required=True)
    p.add_argument("--t-set", required=True)
    p.add_argument("--beta-t", required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.set_defaults(func=_cmd_kl)

    p = sub.add_parser("chisq-check", help="chi-square tail bound and optional empirical check")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_chisq_check)

    p = sub.add_parser("re", help="certify an upper bound on the restricted eigenvalue")
    p.add_argument("--x", required=True, help="data matrix file: first line 'n d', then rows")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-supports", type=int, default=None)
    p.set_defaults(func=_cmd_re)

    p = sub.add_parser("gap", help="efficiency-gap table (fixed design) or gap sweeps (--config)")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--x", default=None)
    p.add_argument("--beta", default=None)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("src", help="two-sided block near-isometry check")
    p.add_argument("--x", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--c-minus", type=float, required=True)
    p.add_argument("--c-plus", type=float, required=True)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_src)

    p = sub.add_parser("sweep", help="run a phase-transition sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify-bounds", help="empirical thresholds vs calculator values")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_verify_bounds)

    p = sub.add_parser("plot", help="emit a plotting script for a sweep CSV")
    p.add_argument("--result", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except SubsetLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: bound (one JSON record), curve (k,eps CSV streams for
plotting), calibrate (solve for sigma or epochs), convert (RDP ->
(eps, delta) and neighboring translation), verify (oracle suites).

Exit codes: 0 success, 1 verification failure, 2 input error. Identical
flags produce byte-identical output unless --timestamp is passed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import baselines, calibrate, convert, dynamics, oracle, sampling
from .params import (
    AccountingError,
    AccountingParams,
    Neighboring,
    load_config,
    make_params,
    sigma_from_multiplier,
    with_epochs,
)

__all__ = ["main", "BOUND_KINDS"]

_FLOAT_FMT = ".17g"


def _fmt(value: float) -> str:
    return format(value, _FLOAT_FMT)


def _kind_fixed(j0_of: Callable[[AccountingParams], int]):
    def run(params: AccountingParams, alpha: float, j0: Optional[int]) -> float:
        return dynamics.bound_fixed(params, alpha, j0_of(params)).eps

    return run


def _kind_fixed_j0(params: AccountingParams, alpha: float, j0: Optional[int]) -> float:
    if j0 is None:
        raise AccountingError("--j0 is required for --kind fixed")
    return dynamics.bound_fixed(params, alpha, j0).eps


BOUND_KINDS: dict[str, Callable[[AccountingParams, float, Optional[int]], float]] = {
    "improved-first": _kind_fixed(lambda p: 0),
    "improved-last": _kind_fixed(lambda p: p.m - 1),
    "fixed-last": _kind_fixed(lambda p: p.m - 1),
    "fixed": _kind_fixed_j0,
    "shuffle": lambda p, a, j0: sampling.bound_shuffle(p, a).eps,
    "samp-wo": lambda p, a, j0: sampling.bound_samp_wo_replacement(p, a),
    "naive": lambda p, a, j0: dynamics.bound_naive_baseline(p, a),
    "sgm": lambda p, a, j0: baselines.sgm_eps(p, a),
    "mixing-diffusion-first": lambda p, a, j0: baselines.mixing_diffusion_first_batch(p, a),
    "mixing-diffusion-last": lambda p, a, j0: baselines.mixing_diffusion_last_batch(p, a),
}


def _parse_float_list(raw: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise AccountingError(f"cannot parse {flag} value {raw!r}") from exc
    if not values:
        raise AccountingError(f"{flag} must list at least one value")
    return values


def _merged_options(args: argparse.Namespace) -> dict:
    merged: dict = {}
    if getattr(args, "config", None):
        merged.update(load_config(args.config))
    overrides = {
        "n": args.n,
        "b": args.b,
        "eta": args.eta,
        "epochs": args.epochs,
        "sigma": args.sigma,
        "sigma_mul": args.sigma_mul,
        "lambda": args.lam,
        "beta": args.beta,
        "sensitivity": args.sensitivity,
        "clip_feature": args.clip_feature,
        "clip_gradient": args.clip_gradient,
        "alpha": args.alpha,
        "delta": args.delta,
        "neighboring": args.neighboring,
        "truncate_last_batch": args.truncate_last_batch or None,
    }
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def _require(merged: dict, *keys: str) -> None:
    missing = [k for k in keys if merged.get(k) is None]
    if missing:
        raise AccountingError(f"missing required flag(s): {', '.join('--' + k for k in missing)}")


def _build_params(merged: dict) -> AccountingParams:
    _require(merged, "n", "b", "eta", "epochs")
    lam = float(merged.get("lambda", 0.0))
    neighboring = Neighboring(merged.get("neighboring", "change_one"))
    truncate = bool(merged.get("truncate_last_batch", False))
    logistic_keys = ("clip_feature", "clip_gradient")
    if any(merged.get(k) is not None for k in logistic_keys):
        _require(merged, "clip_feature", "clip_gradient", "sigma_mul")
        for k in ("beta", "sensitivity", "sigma"):
            if merged.get(k) is not None:
                raise AccountingError(
                    f"--{k} conflicts with the clip_feature/clip_gradient/sigma_mul derivation"
                )
        params = convert.logistic_params(
            n=int(merged["n"]),
            b=int(merged["b"]),
            eta=float(merged["eta"]),
            epochs=int(merged["epochs"]),
            lam=lam,
            l_feat=float(merged["clip_feature"]),
            grad_clip=float(merged["clip_gradient"]),
            sigma_mul=float(merged["sigma_mul"]),
            truncate_last_batch=truncate,
        )
        if neighboring is not Neighboring.CHANGE_ONE:
            params = make_params(
                n=params.n, b=params.b, eta=params.eta, epochs=params.epochs,
                sigma=params.sigma, lam=params.lam, beta=params.beta, s_g=params.s_g,
                neighboring=neighboring, truncate_last_batch=truncate,
            )
        return params
    _require(merged, "beta", "sensitivity")
    sigma = merged.get("sigma")
    if sigma is None:
        _require(merged, "sigma_mul")
        sigma = sigma_from_multiplier(
            float(merged["eta"]), int(merged["b"]),
            float(merged["sensitivity"]), float(merged["sigma_mul"]),
        )
    return make_params(
        n=int(merged["n"]),
        b=int(merged["b"]),
        eta=float(merged["eta"]),
        epochs=int(merged["epochs"]),
        sigma=float(sigma),
        lam=lam,
        beta=float(merged["beta"]),
        s_g=float(merged["sensitivity"]),
        neighboring=neighboring,
        truncate_last_batch=truncate,
    )


def _params_echo(params: AccountingParams) -> dict:
    return {
        "n": params.n,
        "b": params.b,
        "eta": params.eta,
        "epochs": params.epochs,
        "sigma": params.sigma,
        "lambda": params.lam,
        "beta": params.beta,
        "sensitivity": params.s_g,
        "neighboring": params.neighboring.value,
        "truncate_last_batch": params.truncate_last_batch,
        "m": params.m,
        "r": params.r,
    }


def _alpha_list(merged: dict) -> list[float]:
    raw = merged.get("alpha")
    if raw is None:
        raise AccountingError("missing required flag(s): --alpha")
    if isinstance(raw, (int, float)):
        return [float(raw)]
    return _parse_float_list(str(raw), "--alpha")


def _emit(record: dict, args: argparse.Namespace) -> None:
    if getattr(args, "timestamp", False):
        record["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    print(json.dumps(record, sort_keys=True))


def _cmd_bound(args: argparse.Namespace) -> int:
    merged = _merged_options(args)
    params = _build_params(merged)
    alphas = _alpha_list(merged)
    kind = args.kind
    if kind not in BOUND_KINDS:
        raise AccountingError(f"unknown --kind {kind!r}; choose from {sorted(BOUND_KINDS)}")
    evaluator = BOUND_KINDS[kind]
    eps_values = [evaluator(params, a, args.j0) for a in alphas]
    single = len(alphas) == 1
    record: dict = {
        "bound_kind": kind,
        "alpha": alphas[0] if single else alphas,
        "eps_rdp": eps_values[0] if single else eps_values,
        "params": _params_echo(params),
    }
    if kind == "sgm":
        orders = [baselines.sgm_rdp_per_step_any_order(params.q, baselines.SgmParams.from_params(params).sigma_eff, a)[1] for a in alphas]
        if any(o != a for o, a in zip(orders, alphas)):
            record["sgm_order"] = orders[0] if single else orders
    delta = merged.get("delta")
    if delta is not None:
        points = [convert.RdpPoint(alpha=a, eps=e) for a, e in zip(alphas, eps_values)]
        guarantee = convert.rdp_to_dp(points, float(delta), params.neighboring)
        record["delta"] = float(delta)
        record["eps_dp"] = guarantee.eps
        record["alpha_star"] = guarantee.alpha_star
    _emit(record, args)
    return 0


def _curve_values(
    params: AccountingParams, alpha: float, kind: str, j0: Optional[int], epochs_max: int
) -> list[float]:
    if kind == "samp-wo":
        # one pass of the recursion yields every epoch boundary
        trace = sampling.samp_wo_log_states(with_epochs(params, epochs_max), alpha)
        return [trace[k * params.m].log_s / (alpha - 1.0) for k in range(1, epochs_max + 1)]
    return [
        BOUND_KINDS[kind](with_epochs(params, k), alpha, j0)
        for k in range(1, epochs_max + 1)
    ]


def _cmd_curve(args: argparse.Namespace) -> int:
    merged = _merged_options(args)
    if args.epochs_max is not None:
        merged["epochs"] = args.epochs_max
    params = _build_params(merged)
    alphas = _alpha_list(merged)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in BOUND_KINDS:
            raise AccountingError(f"unknown kind {kind!r} in --kinds")
    epochs_max = params.epochs
    if epochs_max < 1:
        raise AccountingError("--epochs-max must be >= 1 for curves")
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        for alpha in alphas:
            values = _curve_values(params, alpha, kind, args.j0, epochs_max)
            rows = [f"{k},{_fmt(v)}" for k, v in enumerate(values, start=1)]
            body = "k,eps\n" + "\n".join(rows) + "\n"
            if out_dir is None:
                print(f"# kind={kind} alpha={alpha:g}")
                sys.stdout.write(body)
            else:
                name = f"{kind}_a={alpha:g}_k={epochs_max}.csv"
                (out_dir / name).write_text(body)
                print(f"# wrote {out_dir / name}")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    merged = _merged_options(args)
    kind = calibrate.BoundKind(args.kind)
    delta = merged.get("delta")
    if delta is None:
        raise AccountingError("missing required flag(s): --delta")
    grid = (
        _alpha_list(merged)
        if merged.get("alpha") is not None
        else list(convert.alpha_grid_from_env())
    )
    if args.solve == "sigma":
        direct_path = all(merged.get(k) is None for k in ("clip_feature", "clip_gradient"))
        if direct_path and merged.get("sigma") is None and merged.get("sigma_mul") is None:
            merged = dict(merged, sigma=1.0)  # placeholder; the bracket is searched
        params = _build_params(merged)
        sigma = calibrate.calibrate_noise(
            params, grid, args.target_eps, float(delta), kind,
        )
        achieved = calibrate.converted_eps(
            calibrate.with_sigma(params, sigma), grid, float(delta), kind
        )
        record = {
            "solve": "sigma",
            "bound_kind": kind.value,
            "target_eps": args.target_eps,
            "delta": float(delta),
            "sigma": sigma,
            "eps_dp_at_sigma": achieved,
            "alpha_grid": grid,
            "params": _params_echo(calibrate.with_sigma(params, sigma)),
        }
    else:
        params = _build_params(merged)
        result = calibrate.max_epochs(params, grid, args.target_eps, float(delta), kind)
        record = {
            "solve": "epochs",
            "bound_kind": kind.value,
            "target_eps": args.target_eps,
            "delta": float(delta),
            "max_epochs": "inf" if result is calibrate.MAXED_OUT else result,
            "alpha_grid": grid,
            "params": _params_echo(params),
        }
    _emit(record, args)
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    alphas = _parse_float_list(args.alpha, "--alpha")
    epses = _parse_float_list(args.eps, "--eps")
    if len(alphas) != len(epses):
        raise AccountingError("--alpha and --eps must list the same number of values")
    source = Neighboring(args.source)
    points = [convert.RdpPoint(alpha=a, eps=e) for a, e in zip(alphas, epses)]
    guarantee = convert.rdp_to_dp(points, args.delta, source)
    target = Neighboring(args.target) if args.target else source
    guarantee = convert.translate_neighboring(guarantee, source, target)
    record = {
        "eps_dp": guarantee.eps,
        "delta": guarantee.delta,
        "alpha_star": guarantee.alpha_star,
        "neighboring": guarantee.neighboring.value,
    }
    _emit(record, args)
    return 0


def _reference_params(merged: dict, epochs: int) -> AccountingParams:
    defaults = {
        "n": 50, "b": 2, "eta": 0.02, "sigma": 2.0,
        "lambda": 1.0, "beta": 4.0, "sensitivity": 4.0,
    }
    filled = dict(defaults)
    filled.update({k: v for k, v in merged.items() if v is not None})
    filled["epochs"] = epochs
    return _build_params(filled)


def _cmd_verify(args: argparse.Namespace) -> int:
    merged = _merged_options(args)
    suites = ("tightness", "dominance", "monte-carlo") if args.suite == "all" else (args.suite,)
    failures = 0
    for suite in suites:
        if suite == "tightness":
            params = _reference_params(merged, epochs=1)
            for alpha in (2.0, 10.0, 30.0):
                instance = oracle.make_instance(params, j0=0)
                report = oracle.verify_dominance(instance, alpha, "fixed", beta=params.beta)
                tight = abs(report.slack) <= 1e-9 * report.bound
                status = "ok" if tight else "FAIL"
                print(f'{{"suite": "tightness", "alpha": {alpha:g}, '
                      f'"report": {report.to_json()}, "status": "{status}"}}')
                failures += 0 if tight else 1
        elif suite == "dominance":
            for epochs in (1, 2, 5, 10, 20, 40):
                params = _reference_params(merged, epochs=epochs)
                positions = sorted({0, params.m // 2, params.m - 1})
                for j0 in positions:
                    for alpha in (2.0, 10.0, 30.0):
                        instance = oracle.make_instance(params, j0=j0)
                        try:
                            report = oracle.verify_dominance(
                                instance, alpha, "fixed", beta=params.beta
                            )
                            status = "ok"
                        except oracle.DominanceViolated as exc:
                            print(f"DominanceViolated: {exc}", file=sys.stderr)
                            failures += 1
                            continue
                        print(f'{{"suite": "dominance", "epochs": {epochs}, "j0": {j0}, '
                              f'"alpha": {alpha:g}, "report": {report.to_json()}, '
                              f'"status": "{status}"}}')
                for alpha in (2.0, 10.0):
                    instance = oracle.make_instance(params, j0=0)
                    try:
                        report = oracle.verify_dominance(
                            instance, alpha, "shuffle", beta=params.beta
                        )
                    except oracle.DominanceViolated as exc:
                        print(f"DominanceViolated: {exc}", file=sys.stderr)
                        failures += 1
                        continue
                    print(f'{{"suite": "dominance", "epochs": {epochs}, '
                          f'"alpha": {alpha:g}, "report": {report.to_json()}, '
                          f'"status": "ok"}}')
        elif suite == "monte-carlo":
            params = _reference_params(merged, epochs=args.mc_epochs)
            instance = oracle.make_instance(params, j0=0)
            try:
                report = oracle.monte_carlo_check(
                    instance, samples=args.samples, seed=args.seed, alt=True
                )
                print(f'{{"suite": "monte-carlo", "report": {report.to_json()}, '
                      f'"status": "ok"}}')
            except oracle.StatisticalMismatch as exc:
                print(f"StatisticalMismatch: {exc}", file=sys.stderr)
                failures += 1
        else:
            raise AccountingError(f"unknown --suite {args.suite!r}")
    print(f'{{"failures": {failures}}}')
    return 1 if failures else 0


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file; flags override it")
    sub.add_argument("--n", type=int, help="dataset size")
    sub.add_argument("--b", type=int, help="mini-batch size")
    sub.add_argument("--eta", type=float, help="stepsize")
    sub.add_argument("--epochs", type=int, help="number of epochs")
    sub.add_argument("--sigma", type=float, help="noise scale (per-step variance 2*eta*sigma^2)")
    sub.add_argument("--sigma-mul", dest="sigma_mul", type=float, help="implementation noise multiplier")
    sub.add_argument("--lambda", dest="lam", type=float, help="strong convexity constant (0 = convex)")
    sub.add_argument("--beta", type=float, help="smoothness constant")
    sub.add_argument("--sensitivity", type=float, help="gradient l2-sensitivity S_g")
    sub.add_argument("--clip-feature", dest="clip_feature", type=float, help="feature clip norm (logistic derivation)")
    sub.add_argument("--clip-gradient", dest="clip_gradient", type=float, help="unregularized-gradient clip norm (= S_g/2)")
    sub.add_argument("--alpha", type=str, help="Renyi order or comma-separated list")
    sub.add_argument("--delta", type=float, help="target delta for (eps, delta)-DP")
    sub.add_argument("--neighboring", choices=[n.value for n in Neighboring], help="dataset adjacency notion")
    sub.add_argument("--truncate-last-batch", dest="truncate_last_batch", action="store_true", default=False,
                     help="ignore the tail batch when b does not divide n")
    sub.add_argument("--timestamp", action="store_true", help="add a timestamp field to JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privdyn",
        description="Hidden-state (last-iterate) Renyi DP accounting for noisy mini-batch gradient descent.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_bound = subparsers.add_parser("bound", help="evaluate one bound; print a JSON record")
    _add_param_flags(p_bound)
    p_bound.add_argument("--kind", required=True, help=f"bound family: {', '.join(sorted(BOUND_KINDS))}")
    p_bound.add_argument("--j0", type=int, help="batch index of the differing record (kind=fixed)")
    p_bound.set_defaults(func=_cmd_bound)

    p_curve = subparsers.add_parser("curve", help="emit k,eps CSV curves over epochs")
    _add_param_flags(p_curve)
    p_curve.add_argument("--kinds", required=True, help="comma-separated bound families")
    p_curve.add_argument("--epochs-max", dest="epochs_max", type=int, help="largest epoch count (overrides --epochs)")
    p_curve.add_argument("--j0", type=int, help="batch index for kind=fixed")
    p_curve.add_argument("--out-dir", dest="out_dir", help="write one CSV file per (kind, alpha) instead of stdout")
    p_curve.set_defaults(func=_cmd_curve)

    p_cal = subparsers.add_parser("calibrate", help="solve for sigma or the epoch budget")
    _add_param_flags(p_cal)
    p_cal.add_argument("--kind", required=True, choices=[k.value for k in calibrate.BoundKind])
    p_cal.add_argument("--target-eps", dest="target_eps", type=float, required=True)
    p_cal.add_argument("--solve", choices=("sigma", "epochs"), default="sigma")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_conv = subparsers.add_parser("convert", help="RDP -> (eps, delta); neighboring translation")
    p_conv.add_argument("--alpha", required=True, help="Renyi order(s), comma separated")
    p_conv.add_argument("--eps", required=True, help="RDP eps value(s), comma separated")
    p_conv.add_argument("--delta", type=float, required=True)
    p_conv.add_argument("--from", dest="source", default="change_one",
                        choices=[n.value for n in Neighboring])
    p_conv.add_argument("--to", dest="target", default=None,
                        choices=[n.value for n in Neighboring])
    p_conv.add_argument("--timestamp", action="store_true")
    p_conv.set_defaults(func=_cmd_convert)

    p_ver = subparsers.add_parser("verify", help="run the oracle verification suites")
    _add_param_flags(p_ver)
    p_ver.add_argument("--suite", default="all",
                       choices=("tightness", "dominance", "monte-carlo", "all"))
    p_ver.add_argument("--samples", type=int, default=100_000)
    p_ver.add_argument("--seed", type=int, default=20240)
    p_ver.add_argument("--mc-epochs", dest="mc_epochs", type=int, default=5)
    p_ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (oracle.DominanceViolated, oracle.StatisticalMismatch) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except AccountingError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"InputError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands:
  region        evaluate allocations, write a CSV with rate pairs,
                benchmark corners/hull and Gaussian-TIN rates
  det-verify    run the rank/achievability identities on the scenario
  codeparams    derive (info bits, codeword bits) for one allocation
  constellation dump a superimposed receive constellation as CSV

Exit codes: 0 success, 2 invalid config, 3 infeasible allocation,
4 property violation.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field

import yaml

from . import detmac
from .config import ChannelConfig, UserSpec
from .errors import (
    ConfigError,
    ConstellationTooLargeError,
    InfeasibleAllocationError,
    VerificationError,
)
from .fblrate import (
    gaussian_sic_region,
    gaussian_tin_rates,
    rate_region_sweep,
)
from .pipeline import BitAllocation, enumerate_allocations, select_code_params
from .signaling import build_scheme, superimpose, write_constellation_csv

CSV_SCHEMA = "hetmac-region-csv v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VIOLATION = 4

_USER_KEYS = {"snr_db", "blocklength", "target_eps", "power", "gain"}
_ESTIMATOR_KEYS = {"samples", "seed"}
_FLAG_KEYS = {"even_only", "scheme_types", "selection_policy"}
_ALLOC_KEYS = {"id", "m", "scheme"}
_TOP_KEYS = {"users", "estimator", "flags", "allocations"}


@dataclass
class Scenario:
    users: list[UserSpec]
    samples: int = 200_000
    seed: int = 0
    even_only: bool = True
    scheme_types: str = "both"
    selection_policy: str = "all"
    # (id, allocation, pinned scheme label or None)
    allocations: list[tuple[str, BitAllocation, str | None]] = field(default_factory=list)

    def channel(self) -> ChannelConfig:
        return ChannelConfig.from_users(self.users)


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_gain(raw):
    if raw is None:
        return None
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, list) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise ConfigError("gain must be a number or a [re, im] pair")


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must hold a mapping")
    _reject_unknown(raw, _TOP_KEYS, "scenario")
    users_raw = raw.get("users")
    if not isinstance(users_raw, list) or not users_raw:
        raise ConfigError("scenario needs a non-empty 'users' list")
    users = []
    for i, u in enumerate(users_raw):
        if not isinstance(u, dict):
            raise ConfigError(f"users[{i}] must be a mapping")
        _reject_unknown(u, _USER_KEYS, f"users[{i}]")
        if "blocklength" not in u or "target_eps" not in u:
            raise ConfigError(f"users[{i}] needs blocklength and target_eps")
        users.append(
            UserSpec(
                snr_db=u.get("snr_db"),
                blocklength=int(u["blocklength"]),
                target_eps=float(u["target_eps"]),
                power=u.get("power"),
                gain=_parse_gain(u.get("gain")),
            )
        )
    scenario = Scenario(users=users)
    est = raw.get("estimator", {})
    if est:
        _reject_unknown(est, _ESTIMATOR_KEYS, "estimator")
        scenario.samples = int(est.get("samples", scenario.samples))
        scenario.seed = int(est.get("seed", scenario.seed))
    flags = raw.get("flags", {})
    if flags:
        _reject_unknown(flags, _FLAG_KEYS, "flags")
        scenario.even_only = bool(flags.get("even_only", True))
        scenario.scheme_types = str(flags.get("scheme_types", "both"))
        scenario.selection_policy = str(flags.get("selection_policy", "all"))
        if scenario.scheme_types not in ("1", "2", "both"):
            raise ConfigError("scheme_types must be 1, 2 or both")
        if scenario.selection_policy not in ("all", "max_min", "sum_rate"):
            raise ConfigError("selection_policy must be all, max_min or sum_rate")
    for j, a in enumerate(raw.get("allocations") or []):
        if not isinstance(a, dict):
            raise ConfigError(f"allocations[{j}] must be a mapping")
        _reject_unknown(a, _ALLOC_KEYS, f"allocations[{j}]")
        if "id" not in a or "m" not in a:
            raise ConfigError(f"allocations[{j}] needs id and m")
        pinned = a.get("scheme")
        if pinned is not None and str(pinned) not in ("1", "2"):
            raise ConfigError(f"allocations[{j}]: scheme must be 1 or 2")
        try:
            alloc = BitAllocation(
                m=tuple(tuple(row) for row in a["m"]),
                scheme_type=int(pinned) if pinned is not None else 1,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"allocations[{j}]: {exc}") from exc
        scenario.allocations.append(
            (str(a["id"]), alloc, str(pinned) if pinned is not None else None)
        )
    return scenario


def _scenario_allocations(scenario: Scenario, cfg: ChannelConfig):
    if scenario.allocations:
        return scenario.allocations
    allocs = enumerate_allocations(cfg, even_only=scenario.even_only)
    width = len(str(max(len(allocs) - 1, 0)))
    return [(f"alloc_{i:0{width}d}", a, None) for i, a in enumerate(allocs)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _pack_table(values: dict, users: int) -> str:
    rows = []
    for k in range(users):
        rows.append(";".join(_fmt(values[(k, l)]) for l in range(k + 1)))
    return "|".join(rows)


def cmd_region(scenario: Scenario, out_path: str, workers: int = 1) -> int:
    cfg = scenario.channel()
    allocations = _scenario_allocations(scenario, cfg)
    results = []
    for alloc_id, alloc, pinned in allocations:
        results.extend(
            rate_region_sweep(
                cfg,
                [(alloc_id, alloc)],
                samples=scenario.samples,
                seed=scenario.seed,
                scheme_types=pinned or scenario.scheme_types,
                workers=workers,
            )
        )
    K = cfg.users
    lines = [
        f"# {CSV_SCHEMA}",
        f"# seed={scenario.seed} samples={scenario.samples} users={K} "
        f"scheme_types={scenario.scheme_types} even_only={scenario.even_only} "
        f"policy={scenario.selection_policy}",
    ]
    rate_cols = ",".join(f"R_{i + 1}" for i in range(K))
    mi_cols = ",".join(f"mi_{i + 1}" for i in range(K))
    disp_cols = ",".join(f"dispsum_{i + 1}" for i in range(K))
    lines.append(
        f"row_type,alloc_id,scheme,m,{rate_cols},{mi_cols},{disp_cols},zeta,mi_se"
    )
    for res in results:
        rates = cfg.to_original([r.rate for r in res.reports])
        mis = cfg.to_original([r.weighted_mi for r in res.reports])
        disps = cfg.to_original([r.dispersion_sum for r in res.reports])
        zeta = _pack_table(res.signaling.zeta, K)
        se = _pack_table(
            {(k, l): res.reports[k].stats[l].std_error for (k, l) in res.signaling.zeta},
            K,
        )
        m_txt = "|".join(";".join(str(v) for v in row) for row in res.alloc.m)
        lines.append(
            ",".join(
                ["scheme", res.alloc_id, res.scheme_label, m_txt]
                + [_fmt(v) for v in rates]
                + [_fmt(v) for v in mis]
                + [_fmt(v) for v in disps]
                + [zeta, se]
            )
        )
    if K == 2:
        region = gaussian_sic_region(cfg)
        for i, corner in enumerate(region.corner_points):
            pair = cfg.to_original(list(corner))
            lines.append(
                ",".join(
                    ["benchmark_corner", f"corner_{i}", "", ""]
                    + [_fmt(v) for v in pair]
                    + [""] * (2 * K)
                    + ["", ""]
                )
            )
        for i, vertex in enumerate(region.hull_vertices):
            pair = cfg.to_original(list(vertex))
            lines.append(
                ",".join(
                    ["benchmark_hull", f"vertex_{i}", "", ""]
                    + [_fmt(v) for v in pair]
                    + [""] * (2 * K)
                    + ["", ""]
                )
            )
    tin = cfg.to_original(gaussian_tin_rates(cfg))
    lines.append(
        ",".join(
            ["gaussian_tin", "tin", "", ""]
            + [_fmt(v) for v in tin]
            + [""] * (2 * K)
            + ["", ""]
        )
    )
    if scenario.selection_policy != "all":
        scheme_rows = [r for r in results]
        if scenario.selection_policy == "max_min":
            best = max(scheme_rows, key=lambda r: (min(r.rates), r.alloc_id))
        else:
            best = max(scheme_rows, key=lambda r: (sum(r.rates), r.alloc_id))
        lines.append(f"# selected alloc_id={best.alloc_id} scheme={best.scheme_label}")
    text = "\n".join(lines) + "\n"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {len(results)} scheme rows to {out_path}")
    return EXIT_OK


def cmd_det_verify(scenario: Scenario, trials: int = 3) -> int:
    cfg = scenario.channel()
    allocations = _scenario_allocations(scenario, cfg)
    status = EXIT_OK
    for alloc_id, alloc, _ in allocations:
        det = detmac.DetConfig(n=cfg.n, m=alloc.m)
        print(f"allocation {alloc_id}: m={alloc.m}")
        for comp in detmac.verify_region(det):
            mark = "ok" if comp.feasible else "INFEASIBLE"
            print(
                f"  component {comp.component + 1}: load {comp.load} / "
                f"capacity {comp.capacity} (slack {comp.slack}) {mark}"
            )
        if not detmac.allocation_feasible(det):
            print("  infeasible allocation, skipping rank identities")
            status = max(status, EXIT_INFEASIBLE)
            continue
        rng = random.Random(scenario.seed)
        for scheme_type in (1, 2):
            witnesses = [None] + [
                {
                    (k, l): detmac.random_full_rank(det.m[k][l], rng)
                    for l in range(det.users)
                    for k in range(l, det.users)
                }
                for _ in range(trials)
            ]
            for f_blocks in witnesses:
                rates = detmac.achieved_rates(det, scheme_type, f_blocks)
                bad = {kl: r for kl, r in rates.items() if r != det.m[kl[0]][kl[1]]}
                if bad:
                    print(f"  scheme {scheme_type}: VIOLATION {bad}")
                    status = max(status, EXIT_VIOLATION)
        rates = detmac.achieved_rates(det, 1)
        summary = ", ".join(
            f"I(user {k + 1}; block {l + 1})={r}" for (k, l), r in sorted(rates.items())
        )
        print(f"  rates: {summary}")
    if status == EXIT_OK:
        print("all rank identities hold")
    return status


def _find_alloc(scenario: Scenario, cfg: ChannelConfig, alloc_id: str) -> BitAllocation:
    for aid, alloc, _ in _scenario_allocations(scenario, cfg):
        if aid == alloc_id:
            return alloc
    raise ConfigError(f"unknown allocation id {alloc_id!r}")


def cmd_codeparams(
    scenario: Scenario, alloc_id: str, scheme_type: int | None, workers: int = 1
) -> int:
    cfg = scenario.channel()
    alloc = _find_alloc(scenario, cfg, alloc_id)
    if scheme_type is not None:
        alloc = BitAllocation(m=alloc.m, scheme_type=scheme_type)
    scheme_type = alloc.scheme_type
    from .fblrate import evaluate_scheme  # local import keeps CLI import light

    sig = build_scheme(cfg, alloc)
    reports = evaluate_scheme(cfg, sig, scenario.samples, scenario.seed, workers)
    params = select_code_params(cfg, alloc, [r.rate for r in reports])
    print(f"allocation {alloc_id} scheme {scheme_type}")
    for entry, report in zip(params.entries, reports):
        label = cfg.order[entry.user] + 1
        note = "  (degenerate)" if entry.degenerate else ""
        print(
            f"user {label}: R={report.rate:.6g} b/sym, info_bits={entry.info_bits}, "
            f"codeword_bits={entry.codeword_bits}, code_rate={entry.rate:.6g}{note}"
        )
    return EXIT_OK


def cmd_constellation(
    scenario: Scenario, alloc_id: str, component: int, out_path: str, scheme_type: int | None
) -> int:
    cfg = scenario.channel()
    alloc = _find_alloc(scenario, cfg, alloc_id)
    if scheme_type is not None:
        alloc = BitAllocation(m=alloc.m, scheme_type=scheme_type)
    sig = build_scheme(cfg, alloc)
    if not 1 <= component <= cfg.users:
        raise ConfigError(f"component must lie in 1..{cfg.users}")
    const = superimpose(sig, cfg, component - 1)
    write_constellation_csv(const, out_path)
    print(
        f"wrote {const.cardinality} points (dmin={const.dmin:.6g}) to {out_path}"
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetmac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    region = sub.add_parser("region", help="rate-region sweep to CSV")
    region.add_argument("--scenario", required=True)
    region.add_argument("--out", required=True)
    region.add_argument("--samples", type=int)
    region.add_argument("--seed", type=int)
    region.add_argument("--workers", type=int, default=1)
    region.add_argument("--even-only", action="store_true", default=None)
    region.add_argument("--scheme", choices=["1", "2", "both"])

    verify = sub.add_parser("det-verify", help="rank identity checks")
    verify.add_argument("--scenario", required=True)

    code = sub.add_parser("codeparams", help="channel code parameters")
    code.add_argument("--scenario", required=True)
    code.add_argument("--alloc", required=True)
    code.add_argument("--scheme", type=int, choices=[1, 2], default=None)
    code.add_argument("--samples", type=int)
    code.add_argument("--seed", type=int)
    code.add_argument("--workers", type=int, default=1)

    const = sub.add_parser("constellation", help="superimposed point dump")
    const.add_argument("--scenario", required=True)
    const.add_argument("--alloc", required=True)
    const.add_argument("--component", type=int, required=True)
    const.add_argument("--out", required=True)
    const.add_argument("--scheme", type=int, choices=[1, 2], default=None)
    return parser


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> None:
    if getattr(args, "samples", None) is not None:
        scenario.samples = args.samples
    if getattr(args, "seed", None) is not None:
        scenario.seed = args.seed
    if getattr(args, "even_only", None):
        scenario.even_only = True
    scheme = getattr(args, "scheme", None)
    if args.command == "region" and scheme is not None:
        scenario.scheme_types = scheme


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        _apply_overrides(scenario, args)
        if args.command == "region":
            return cmd_region(scenario, args.out, workers=args.workers)
        if args.command == "det-verify":
            return cmd_det_verify(scenario)
        if args.command == "codeparams":
            return cmd_codeparams(scenario, args.alloc, args.scheme, args.workers)
        if args.command == "constellation":
            return cmd_constellation(
                scenario, args.alloc, args.component, args.out, args.scheme
            )
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleAllocationError as exc:
        print(f"infeasible allocation: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (VerificationError, ConstellationTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    raise SystemExit(main())

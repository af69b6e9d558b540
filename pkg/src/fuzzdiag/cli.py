"""Command line entry point: survey, detect, tune, simulate, report.

Exit codes: 0 success, 2 usage, 3 configuration, 4 input, 5 cold start.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import re
import sys
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterator, Optional, Sequence, TextIO

from .alerting import AsyncSink, Sinks, sink_from_descriptor
from .baseline import ProfileError, load_profiles, save_profiles
from .config import Config, load_config
from .ingest import ConfigError, FlowRecord, read_records, write_records
from .pipeline import Detector, load_rulebases, normal_samples, survey, tune
from .rulebook import ActionLevel, ModuleKind, RulebookError, save_rulebase
from .simgen import ScenarioError, generate, load_scenario, reference_scenarios

log = logging.getLogger("fuzzdiag")

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_COLD_START = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@contextlib.contextmanager
def _open_input(path: str) -> Iterator[TextIO]:
    if path == "-":
        yield sys.stdin
        return
    try:
        f = open(path)
    except OSError as exc:
        raise CliError(f"cannot read input {path}: {exc}", EXIT_INPUT) from None
    with f:
        yield f


def _records(stream: TextIO, bad: list) -> Iterator[FlowRecord]:
    return read_records(stream, strict=False, errors=bad)


def _config(args) -> Config:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    if getattr(args, "profile", None):
        cfg.profile = args.profile
    if getattr(args, "rules_dir", None):
        d = Path(args.rules_dir)
        if not d.is_dir():
            raise CliError(f"rules directory {d} does not exist", EXIT_CONFIG)
        for m in ModuleKind:
            p = d / f"{m.value}.rules"
            if p.is_file():
                cfg.rulebases[m] = str(p)
    return cfg


def _rulebases(cfg: Config):
    try:
        return load_rulebases(cfg)
    except (OSError, RulebookError) as exc:
        raise CliError(f"rule base: {exc}", EXIT_CONFIG) from None


def _load_profiles(cfg: Config):
    if not Path(cfg.profile).is_file():
        raise CliError(f"profile {cfg.profile} not found; run 'survey' first", EXIT_CONFIG)
    try:
        profiles = load_profiles(cfg.profile)
    except (OSError, ProfileError) as exc:
        raise CliError(f"profile {cfg.profile}: {exc}", EXIT_CONFIG) from None
    missing = [m.value for m in ModuleKind if m not in profiles]
    if missing:
        raise CliError(f"profile {cfg.profile} lacks modules {missing}", EXIT_CONFIG)
    return profiles


def cmd_survey(args) -> int:
    cfg = _config(args)
    profiles = None
    if Path(cfg.profile).is_file() and not args.fresh:
        profiles = _load_profiles(cfg)
        p = profiles[ModuleKind.IP_COUNT]
        if (p.slot_len, p.weekly) != (cfg.slot_len, cfg.weekly):
            raise CliError(f"existing profile uses slot_len={p.slot_len} weekly={p.weekly}; "
                           "use --fresh to start over", EXIT_CONFIG)
    bad: list = []
    with _open_input(args.input) as stream:
        profiles, stats = survey(_records(stream, bad), cfg, profiles)
    try:
        save_profiles(profiles, cfg.profile)
    except OSError as exc:
        raise CliError(f"cannot write profile {cfg.profile}: {exc}", EXIT_CONFIG) from None
    print(f"records: {stats['records']}  windows: {stats['windows']}  "
          f"rejected: {stats['rejected']}  malformed: {len(bad)}")
    for m, p in profiles.items():
        uncovered = [k for k, c in enumerate(p.n) if c == 0]
        line = f"{m.value:<12} covered {p.coverage()}/{p.num_slots} slots"
        if uncovered:
            shown = ", ".join(map(str, uncovered[:12])) + (" ..." if len(uncovered) > 12 else "")
            line += f"  (empty: {shown})"
        print(line)
    print(f"profile written to {cfg.profile}")
    if stats["records"] == 0:
        print("error: no records in input", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _sinks(cfg: Config, log_path: str) -> Sinks:
    try:
        email = sink_from_descriptor(cfg.email)
        sms = sink_from_descriptor(cfg.sms)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    try:
        return Sinks(log_path, AsyncSink(email) if email else None, AsyncSink(sms) if sms else None)
    except OSError as exc:
        raise CliError(f"cannot open alert log {log_path}: {exc}", EXIT_CONFIG) from None


def cmd_detect(args) -> int:
    cfg = _config(args)
    profiles = _load_profiles(cfg)
    if all(p.coverage() == 0 for p in profiles.values()):
        raise CliError(f"profile {cfg.profile} has no survey data", EXIT_COLD_START)
    rbs = _rulebases(cfg)
    sinks = _sinks(cfg, args.log or cfg.log)
    bad: list = []
    detector = Detector(profiles, rbs, cfg, sinks, learn=args.learn)
    try:
        with _open_input(args.input) as stream:
            summary = detector.run(_records(stream, bad))
    finally:
        sinks.close()
    for s in (sinks.email, sinks.sms):
        if isinstance(s, AsyncSink):
            summary.sink_failures += s.failures + s.overflow
    if args.learn:
        save_profiles(profiles, cfg.profile)
    print(summary.format())
    if bad:
        print(f"malformed records skipped: {len(bad)}")
    if summary.cold_start:
        print(f"warning: {summary.cold_start} module-windows skipped for lack of survey data", file=sys.stderr)
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _config(args)
    profiles = _load_profiles(cfg)
    rbs = _rulebases(cfg)
    with _open_input(args.input) as stream:
        samples = normal_samples(_records(stream, []), profiles, cfg)
    holdout = None
    if args.holdout:
        with _open_input(args.holdout) as stream:
            holdout = normal_samples(_records(stream, []), profiles, cfg)
    results = tune(samples, rbs, cfg, holdout)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not any(samples.values()):
        print("warning: no usable samples in input, rule bases unchanged", file=sys.stderr)
    for m, (rb, report) in results.items():
        save_rulebase(rb, out / f"{m.value}.rules")
        print(f"== {m.value}")
        print(report.format())
    print(f"tuned rule bases written to {out}/")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenarios = reference_scenarios()
    if args.list:
        for name, spec in scenarios.items():
            kinds = ", ".join(a.kind.value for a in spec.anomalies) or "none"
            print(f"{name:<16} duration={spec.duration:g}s anomalies: {kinds}")
        return EXIT_OK
    if args.scenario is None:
        raise CliError("scenario name or file required", EXIT_INPUT)
    if args.scenario in scenarios:
        spec = scenarios[args.scenario]
    elif Path(args.scenario).is_file():
        try:
            spec = load_scenario(args.scenario)
        except ScenarioError as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    else:
        raise CliError(f"unknown scenario {args.scenario!r}; available: {', '.join(scenarios)}", EXIT_INPUT)
    try:
        records = generate(spec, args.seed)
        if args.out and args.out != "-":
            with open(args.out, "w") as f:
                n = write_records(records, f)
        else:
            n = write_records(records, sys.stdout)
    except ScenarioError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    log.info("wrote %d records", n)
    return EXIT_OK


_LOG_RE = re.compile(
    r"^ts=(?P<ts>\S+) module=(?P<module>\w+) action=(?P<action>LOG|EMAIL|SMS) "
    r"severity=(?P<severity>\S+) ratio=(?P<ratio>\S+) tod=(?P<tod>\S+) "
    r"suppressed=(?P<suppressed>\d+) downgraded=(?P<downgraded>[01])$"
)


def parse_log_line(line: str) -> Optional[dict]:
    m = _LOG_RE.match(line.strip())
    if m is None:
        return None
    d = m.groupdict()
    try:
        return {
            "ts": float(d["ts"]), "module": ModuleKind(d["module"]), "action": ActionLevel[d["action"]],
            "severity": float(d["severity"]), "ratio": float(d["ratio"]), "tod": float(d["tod"]),
            "suppressed": int(d["suppressed"]), "downgraded": d["downgraded"] == "1",
        }
    except ValueError:
        return None


def cmd_report(args) -> int:
    entries, skipped = [], 0
    with _open_input(args.log) as stream:
        for line in stream:
            if not line.strip() or line.startswith("#"):
                continue
            e = parse_log_line(line)
            if e is None:
                skipped += 1
            else:
                entries.append(e)
    if not entries:
        print("no alerts")
        if skipped:
            print(f"skipped: {skipped}")
        return EXIT_OK
    counts = Counter((e["module"], e["action"]) for e in entries)
    suppressed = Counter()
    downgraded = 0
    for e in entries:
        suppressed[e["module"]] += e["suppressed"]
        downgraded += e["downgraded"]
    actions = (ActionLevel.LOG, ActionLevel.EMAIL, ActionLevel.SMS)
    print(f"{'module':<12} " + " ".join(f"{a.name:>6}" for a in actions) + "  suppressed")
    for m in ModuleKind:
        print(f"{m.value:<12} " + " ".join(f"{counts[(m, a)]:>6}" for a in actions) + f"  {suppressed[m]:>10}")
    print(f"total dispatched: {len(entries)}  suppressed: {sum(suppressed.values())}  "
          f"downgraded: {downgraded}  skipped: {skipped}")
    print(f"top {args.top} windows by severity:")
    for e in sorted(entries, key=lambda e: (-e["severity"], e["ts"]))[:args.top]:
        print(f"  ts={e['ts']:.3f} tod={e['tod']:05.2f} {e['module'].value:<12} {e['action'].name:<5} "
              f"severity={e['severity']:.4f} ratio={e['ratio']:.4f}")
    if args.plot_dir:
        out = Path(args.plot_dir)
        out.mkdir(parents=True, exist_ok=True)
        per_module = defaultdict(list)
        for e in entries:
            per_module[e["module"]].append(e)
        for m in ModuleKind:
            with open(out / f"{m.value}.tsv", "w") as f:
                f.write("ts\ttod\tratio\tseverity\taction\tsuppressed\n")
                for e in per_module[m]:
                    f.write(f"{e['ts']:.3f}\t{e['tod']:.2f}\t{e['ratio']:.4f}\t{e['severity']:.4f}\t"
                            f"{int(e['action'])}\t{e['suppressed']}\n")
        print(f"plot data written to {out}/")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuzzdiag", description="Fuzzy traffic-anomaly diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, rules=True):
        sp.add_argument("--config", "-c", help="TOML config file")
        sp.add_argument("--profile", help="profile path (overrides config)")
        if rules:
            sp.add_argument("--rules-dir", help="directory of <Module>.rules files")

    sp = sub.add_parser("survey", help="learn the baseline profile from flow records")
    common(sp, rules=False)
    sp.add_argument("--fresh", action="store_true", help="ignore an existing profile")
    sp.add_argument("input", nargs="?", default="-")
    sp.set_defaults(func=cmd_survey)

    sp = sub.add_parser("detect", help="run detection and alerting over flow records")
    common(sp)
    sp.add_argument("--log", help="alert log path (overrides config)")
    sp.add_argument("--learn", action="store_true", help="keep updating the profile while detecting")
    sp.add_argument("input", nargs="?", default="-")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("tune", help="tune intensity terms on normal traffic")
    common(sp)
    sp.add_argument("--holdout", help="normal flow records used to count false alerts (default: input)")
    sp.add_argument("--out", required=True, help="directory for tuned rule-base files")
    sp.add_argument("input", nargs="?", default="-")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("simulate", help="emit synthetic flow records")
    sp.add_argument("scenario", nargs="?", help="reference scenario name or TOML scenario file")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output file (default stdout)")
    sp.add_argument("--list", action="store_true", help="list reference scenarios")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="summarize an alert log")
    sp.add_argument("log", nargs="?", default="-")
    sp.add_argument("--top", type=int, default=10)
    sp.add_argument("--plot-dir", help="write per-module columnar data files here")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

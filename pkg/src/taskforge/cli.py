"""Command-line entry point: `taskforge <stage> [options]`.

Options may come from a JSON config file (`--config`); any flag given
explicitly on the command line overrides the file value.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, TaskforgeError
from .pipeline import STAGES, PipelineConfig, run_pipeline
from .taxonomy import ALL_MODIFIERS, ModifierId

_PATH_KEYS = ("repo", "templates", "out", "verifier", "coverage",
              "external_candidates", "package_input", "package_output", "tasks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskforge",
        description="Turn repository snapshots into executable, verified "
                    "software-engineering task records.")
    sub = parser.add_subparsers(dest="stage", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config file; explicit flags override it")
        p.add_argument("--repo", type=Path, default=None,
                       help="repository snapshot directory")
        p.add_argument("--templates", type=Path, default=None,
                       help="language template directory (default: ./templates "
                            "if present, else the bundled set)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory for stage artifacts (default: out)")
        p.add_argument("--seed", type=int, default=None, help="pipeline seed")
        p.add_argument("--jobs", type=int, default=None,
                       help="parallel sandbox workers")
        p.add_argument("--wall-timeout", type=float, default=None,
                       help="per-run wall clock limit (seconds)")
        p.add_argument("--verifier", type=Path, default=None,
                       help="verifier metadata json (default: <repo>/verifier.json)")

    p_analyze = sub.add_parser("analyze", help="build the entity analysis report")
    common(p_analyze)

    p_gate = sub.add_parser("gate", help="check environment readiness")
    common(p_gate)

    p_forge = sub.add_parser("forge", help="plan procedural bug candidates")
    common(p_forge)
    p_forge.add_argument("--modifiers", default=None,
                         help="comma-separated modifier ids (default: all)")
    p_forge.add_argument("--external-candidates", type=Path, default=None,
                         help="jsonl manifest of externally supplied edit sets")

    p_verify = sub.add_parser("verify", help="execute and filter candidates")
    common(p_verify)

    p_package = sub.add_parser("package", help="assemble validated task records")
    common(p_package)
    p_package.add_argument("--in", dest="package_input", type=Path, default=None,
                           help="verified-candidates file "
                                "(default: <out>/candidates-verified.jsonl)")
    p_package.add_argument("--out-tasks", dest="package_output", type=Path,
                           default=None,
                           help="task archive path (default: <out>/tasks.jsonl)")

    p_hollow = sub.add_parser("hollow", help="mine scopes and hollow them")
    common(p_hollow)
    p_hollow.add_argument("--coverage", type=Path, default=None,
                          help="line-delimited test-to-entity coverage map")
    p_hollow.add_argument("--min-isolation", type=float, default=None)
    p_hollow.add_argument("--min-entities", type=int, default=None)

    p_replay = sub.add_parser("replay", help="re-derive task record evidence")
    common(p_replay)
    p_replay.add_argument("--tasks", type=Path, default=None,
                          help="task archive (default: <out>/tasks.jsonl)")
    return parser


def parse_modifiers(text: str) -> tuple[ModifierId, ...]:
    if text.strip().lower() == "all":
        return ALL_MODIFIERS
    out = []
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            out.append(ModifierId(name))
        except ValueError:
            valid = ", ".join(m.value for m in ALL_MODIFIERS)
            raise SystemExit(f"unknown modifier {name!r} (valid: {valid})")
    return tuple(out)


def _merged_options(args: argparse.Namespace) -> dict:
    """File values first, explicit flags on top, defaults last."""
    options: dict = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        try:
            options.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}")
    for key, value in vars(args).items():
        if key in ("stage", "config") or value is None:
            continue
        options[key] = value
    for key in _PATH_KEYS:
        if options.get(key) is not None:
            options[key] = Path(options[key])
    return options


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        options = _merged_options(args)
        if not options.get("repo"):
            raise ConfigError("--repo is required (flag or config file)")
        modifiers = options.get("modifiers", "all")
        if isinstance(modifiers, str):
            modifiers = parse_modifiers(modifiers)
        else:
            modifiers = tuple(ModifierId(m) for m in modifiers)
        config = PipelineConfig(
            repo_path=options["repo"],
            out_dir=options.get("out") or Path("out"),
            templates_dir=options.get("templates"),
            seed=int(options.get("seed", 0)),
            jobs=int(options.get("jobs", 1)),
            wall_timeout=float(options.get("wall_timeout", 120.0)),
            modifiers=modifiers,
            verifier_path=options.get("verifier"),
            coverage_path=options.get("coverage"),
            min_isolation=float(options.get("min_isolation", 0.8)),
            min_entities=int(options.get("min_entities", 3)),
            external_candidates=options.get("external_candidates"),
            package_input=options.get("package_input"),
            package_output=options.get("package_output"),
            tasks_path=options.get("tasks"),
        )
        return run_pipeline(config, args.stage)
    except TaskforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

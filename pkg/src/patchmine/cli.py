"""Command-line entry point: mine, stats, apply, dump-res."""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import ast as _ast
from .corpus import DEFAULT_EXCLUDE, DEFAULT_INCLUDE, CorpusError, HunkId, hunk_counts, load_corpus
from .diff import MIN_DICE, MIN_HEIGHT
from .index import reduction_report
from .mine import iterate, read_clusters, read_index, stats_report, write_outputs
from .repair import RepairError, load_catalog, read_locations, repair
from .res import FOLDS, corpus_res, load_cache, save_cache, serialize

logger = logging.getLogger("patchmine")

CACHE_NAME = "res.cache.json"
CONFIG_NAME = "config.txt"
MANIFEST_NAME = "MANIFEST"


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    corpus: str = ""
    grammar: str = "java"
    include: list = field(default_factory=lambda: list(DEFAULT_INCLUDE))
    exclude: list = field(default_factory=lambda: list(DEFAULT_EXCLUDE))
    min_height: int = MIN_HEIGHT
    min_dice: float = MIN_DICE
    threshold: float = 0.0
    workers: int = 0
    output: str = "out"
    timeout: float = 60.0

    def validate(self) -> "Config":
        if self.grammar not in _ast.grammars():
            raise ConfigError(f"unknown grammar {self.grammar!r}; known: {', '.join(_ast.grammars())}")
        if self.min_height < 1:
            raise ConfigError("min_height must be >= 1")
        if not 0.0 <= self.min_dice <= 1.0:
            raise ConfigError("min_dice must be in [0, 1]")
        if self.threshold < 0:
            raise ConfigError("threshold must be >= 0")
        if self.workers < 0 or self.timeout <= 0:
            raise ConfigError("workers must be >= 0 and timeout > 0")
        return self

    @property
    def worker_count(self) -> int:
        return self.workers or os.cpu_count() or 1

    def dump(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ",".join(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    def update(self, key: str, raw: str) -> None:
        known = {f.name: f for f in fields(self)}
        key = key.strip().replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(self, key)
        raw = raw.strip()
        try:
            if isinstance(current, list):
                value = [x for x in raw.split(",") if x]
            elif isinstance(current, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        setattr(self, key, value)


def read_config(path) -> Config:
    cfg = Config()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg.update(key, value)
    return cfg


def build_config(args) -> Config:
    cfg = read_config(args.config) if getattr(args, "config", None) else Config()
    for name in ("corpus", "grammar", "min_height", "min_dice", "threshold", "workers", "output", "timeout"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    for name in ("include", "exclude"):
        value = getattr(args, name, None)
        if value:
            setattr(cfg, name, list(value))
    return cfg.validate()


def corpus_fingerprint(cfg: Config) -> str:
    """Hash of every corpus file plus the settings that shape the scripts."""
    h = hashlib.sha256()
    for key in ("grammar", "include", "exclude", "min_height", "min_dice"):
        h.update(f"{key}={getattr(cfg, key)}\n".encode())
    root = Path(cfg.corpus)
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode() + b"\0")
        h.update(path.read_bytes() + b"\0")
    return h.hexdigest()


class Manifest:
    def __init__(self, out: Path):
        self.path = out / MANIFEST_NAME
        self.stages: list[str] = []
        self.path.write_text("", encoding="utf-8")

    def done(self, stage: str) -> None:
        self.stages.append(stage)
        self.path.write_text("".join(f"{s}\n" for s in self.stages), encoding="utf-8")


def load_scripts(cfg: Config, out: Path):
    """Rich Edit Scripts for the corpus, reusing the cache when nothing changed."""
    fingerprint = corpus_fingerprint(cfg)
    cache = out / CACHE_NAME
    if cache.is_file():
        try:
            scripts, meta = load_cache(cache)
            if meta.get("fingerprint") == fingerprint:
                logger.info("reusing %d cached scripts", len(scripts))
                return scripts, meta
        except (ValueError, KeyError) as exc:
            logger.warning("ignoring unreadable cache: %s", exc)
    records = load_corpus(cfg.corpus, cfg.include, cfg.exclude)
    built = corpus_res(records, cfg.grammar, min_height=cfg.min_height, min_dice=cfg.min_dice)
    meta = {
        "fingerprint": fingerprint,
        "hunk_counts": hunk_counts(records),
        "skipped": dict(sorted(built.skipped.items())),
    }
    save_cache(cache, built.scripts, meta)
    logger.info("built %d scripts from %d patches; skipped %s", len(built.scripts), len(records), built.skipped)
    return built.scripts, meta


def cmd_mine(cfg: Config) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_NAME).write_text(cfg.dump(), encoding="utf-8")
    manifest = Manifest(out)
    try:
        scripts, meta = load_scripts(cfg, out)
        manifest.done("res")
        result = iterate(scripts, cfg.threshold, cfg.worker_count)
        manifest.done("mine")
        write_outputs(out, result, {r.hunk_id: r for r in scripts}, meta["hunk_counts"])
        manifest.done("report")
    except CorpusError as exc:
        logger.error("%s", exc)
        return 1
    except Exception:
        logger.exception("mining failed after stages %s", manifest.stages)
        return 1
    for fold in FOLDS:
        print(f"{fold}: {len(result.clusters[fold])} clusters")
    return 0


def cmd_stats(out_dir) -> int:
    out = Path(out_dir)
    try:
        _, meta = load_cache(out / CACHE_NAME)
        indices = {f: read_index(out / f"index.{f.lower()}.json", f) for f in FOLDS}
        clusters = {f: read_clusters(out / f"clusters.{f.lower()}.json", f) for f in FOLDS}
    except (OSError, ValueError, KeyError) as exc:
        logger.error("cannot read mining outputs in %s: %s", out, exc)
        return 1
    counts = meta.get("hunk_counts", {})
    total = sum(counts.values())
    reports = {f: reduction_report(indices[f], total if f == "Shape" else indices[f].size) for f in FOLDS}
    sys.stdout.write(stats_report(reports, clusters, counts))
    return 0


def cmd_dump_res(cfg: Config, hunk: str) -> int:
    try:
        hunk_id = HunkId.parse(hunk)
    except ValueError as exc:
        logger.error("%s", exc)
        return 2
    out = Path(cfg.output)
    if cfg.corpus:
        out.mkdir(parents=True, exist_ok=True)
        scripts, _ = load_scripts(cfg, out)
    else:
        scripts, _ = load_cache(out / CACHE_NAME)
    for r in scripts:
        if r.hunk_id == hunk_id:
            sys.stdout.write(serialize(r))
            return 0
    logger.error("no Rich Edit Script for %s", hunk_id)
    return 1


def cmd_apply(args) -> int:
    out = Path(args.output or "out")
    try:
        locations = read_locations(args.locations)
        patterns = [p for path in args.catalog for p in load_catalog(path)]
    except (OSError, RepairError, ValueError) as exc:
        logger.error("%s", exc)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = repair(args.project, locations, patterns, args.test_cmd, args.timeout or 60.0)
    except (OSError, RepairError, _ast.ParseError) as exc:
        logger.error("%s", exc)
        return 2
    (out / "attempts.log").write_text("".join(a.line() + "\n" for a in result.attempts), encoding="utf-8")
    diff_path = out / "patch.diff"
    if result.plausible is None:
        if diff_path.exists():
            diff_path.unlink()
        print(f"no plausible patch after {len(result.attempts)} attempts")
        return 1
    diff_path.write_text(result.diff(), encoding="utf-8")
    print(f"plausible patch found at attempt {len(result.attempts) - 1}: {diff_path}")
    return 0


def _add_mining_options(p):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--corpus", help="corpus root directory")
    p.add_argument("--grammar")
    p.add_argument("--include", action="append", help="source glob (repeatable)")
    p.add_argument("--exclude", action="append", help="excluded glob (repeatable)")
    p.add_argument("--min-height", type=int, dest="min_height")
    p.add_argument("--min-dice", type=float, dest="min_dice")
    p.add_argument("--threshold", type=float)
    p.add_argument("--workers", type=int, help="0 = all cores")
    p.add_argument("--out", dest="output", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchmine", description="Mine fix patterns and apply them.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine Shape/Action/Token patterns from a corpus")
    _add_mining_options(p)

    p = sub.add_parser("stats", help="print statistics of a mining run")
    p.add_argument("output", help="mining output directory")

    p = sub.add_parser("dump-res", help="print the Rich Edit Script of one hunk")
    p.add_argument("hunk_id", help="<patch>/<path>#<n>")
    _add_mining_options(p)

    p = sub.add_parser("apply", help="generate and validate patches from a pattern catalog")
    p.add_argument("--project", required=True, help="source tree the locations refer to")
    p.add_argument("--locations", required=True, help="locations.tsv: path, start, end, rank")
    p.add_argument("--catalog", action="append", default=[], help="pattern catalog (repeatable)")
    p.add_argument("--test-cmd", required=True, dest="test_cmd")
    p.add_argument("--timeout", type=float, help="seconds per test run (default 60)")
    p.add_argument("--out", dest="output")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "mine":
            cfg = build_config(args)
            if not cfg.corpus:
                parser.error("mine needs --corpus (or corpus= in --config)")
            return cmd_mine(cfg)
        if args.command == "stats":
            return cmd_stats(args.output)
        if args.command == "dump-res":
            return cmd_dump_res(build_config(args), args.hunk_id)
        return cmd_apply(args)
    except (ConfigError, OSError) as exc:
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

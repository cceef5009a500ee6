"""Command-line front end.

Subcommands:

* ``generate``: write a deterministic toy lexicon.
* ``prepare``: align a raw two-column lexicon (word, phonemes) into the
  six-column format, deriving grapheme flags from alignment nulls.
* ``run``: execute the experiment grid described by a JSON run
  configuration and write all reports, plots and trained-system artifacts.
* ``predict``: convert words on standard input with a saved system.
* ``inspect-tree``: print size statistics of a saved system or tree.

Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 completed
with rejected input lines.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .align import AlignmentError, align
from .evaluation import make_folds, run_experiment
from .lexicon import (
    AlignedEntry,
    LexiconFormatError,
    Task,
    parse_lexicon,
    write_lexicon,
)
from .pipeline import (
    PRESETS,
    ModuleSpec,
    Regime,
    SystemSpec,
    dump_system,
    load_system,
    train_system,
)
from .reports import write_all
from .toylang import generate_toy_lexicon
from .tree import loads_tree, tree_stats

CONFIG_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_PARTIAL = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run configuration; see README for the schema."""

    lexicon: str | None
    toy: dict | None
    systems: list[SystemSpec]
    regimes: list[Regime]
    folds: int
    seed: int
    output_dir: Path
    workers: int
    save_systems: bool
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, config_dir: Path) -> "RunConfig":
        version = data.get("format_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config format_version {version!r}")
        lexicon = data.get("lexicon")
        toy = data.get("toy")
        if (lexicon is None) == (toy is None):
            raise ConfigError("config needs exactly one of 'lexicon' (path) or 'toy' (seed/words)")
        if lexicon is not None:
            lexicon_path = (config_dir / lexicon).resolve() if not Path(lexicon).is_absolute() else Path(lexicon)
            if not lexicon_path.is_file():
                raise ConfigError(f"lexicon file not found: {lexicon_path}")
            lexicon = str(lexicon_path)
        if toy is not None:
            if not isinstance(toy, dict) or not {"seed", "words"} <= set(toy):
                raise ConfigError("'toy' must be an object with 'seed' and 'words'")
        systems = [_parse_system(s) for s in data.get("systems", ["MAGYS", "MGS", "GS"])]
        if not systems:
            raise ConfigError("config must name at least one system")
        names = [s.name for s in systems]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate system names: {names}")
        regime_names = data.get("regimes", ["isolated", "ideal", "adaptive"])
        if not regime_names:
            raise ConfigError("config must name at least one regime")
        try:
            regimes = [Regime(r) for r in regime_names]
        except ValueError as exc:
            raise ConfigError(f"unknown regime in {regime_names}") from exc
        folds = int(data.get("folds", 10))
        seed = int(data.get("seed", 0))
        workers = int(data.get("workers", 1))
        out_raw = data.get("output_dir", "out")
        output_dir = (config_dir / out_raw) if not Path(out_raw).is_absolute() else Path(out_raw)
        return cls(
            lexicon=lexicon,
            toy=toy,
            systems=systems,
            regimes=regimes,
            folds=folds,
            seed=seed,
            output_dir=output_dir,
            workers=workers,
            save_systems=bool(data.get("save_systems", True)),
            raw=data,
        )

    def snapshot(self) -> dict:
        return {
            "format_version": CONFIG_VERSION,
            "lexicon": self.lexicon,
            "toy": self.toy,
            "systems": {
                s.name: [
                    {"task": m.code, "base": m.base, "annotations": list(m.annotations)}
                    for m in s.modules
                ]
                for s in self.systems
            },
            "regimes": [r.value for r in self.regimes],
            "folds": self.folds,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "workers": self.workers,
            "save_systems": self.save_systems,
        }


def _parse_system(spec) -> SystemSpec:
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ConfigError(f"unknown system preset {spec!r} (have {sorted(PRESETS)})")
        return PRESETS[spec]
    try:
        modules = tuple(
            ModuleSpec(Task(m["task"]), m.get("base", "letters"), tuple(m.get("annotations", ())))
            for m in spec["modules"]
        )
        return SystemSpec(spec["name"], modules)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed system spec {spec!r}: {exc}") from exc


def _load_entries(config: RunConfig) -> list[AlignedEntry]:
    if config.lexicon is not None:
        with open(config.lexicon, encoding="utf-8") as fp:
            return parse_lexicon(fp, config.lexicon)
    return generate_toy_lexicon(int(config.toy["seed"]), int(config.toy["words"]))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.config).read_text("utf-8"))
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    for key in ("output_dir", "folds", "seed", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.systems:
        data["systems"] = args.systems.split(",")
    if args.regimes:
        data["regimes"] = args.regimes.split(",")

    try:
        config = RunConfig.from_dict(data, Path(args.config).resolve().parent)
        entries = _load_entries(config)
        plan = make_folds(len(entries), config.folds, config.seed)
    except (ConfigError, LexiconFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    started = time.time()
    try:
        result = run_experiment(entries, config.systems, config.regimes, plan, workers=config.workers)
        out_dir = config.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.json").write_text(
            json.dumps(config.snapshot(), indent=2, sort_keys=True) + "\n", "utf-8"
        )
        paths = write_all(result, out_dir)
        if config.save_systems:
            systems_dir = out_dir / "systems"
            systems_dir.mkdir(exist_ok=True)
            for system in config.systems:
                for regime in config.regimes:
                    if regime is Regime.ISOLATED:
                        continue  # isolated modules are baselines, not a runnable pipeline
                    trained = train_system(system, entries, regime)
                    path = systems_dir / f"{system.name}.{regime.value}.igt"
                    with path.open("w", encoding="utf-8") as fp:
                        dump_system(trained, fp)
        (out_dir / "run_info.json").write_text(
            json.dumps(
                {
                    "igtree_version": __version__,
                    "elapsed_seconds": round(time.time() - started, 3),
                    "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                    "words": len(entries),
                    "instances": sum(len(e) for e in entries),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            "utf-8",
        )
    except Exception as exc:  # noqa: BLE001 - report any cell failure with context
        print(f"error: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(paths)} report files to {config.output_dir}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        entries = generate_toy_lexicon(args.seed, args.words)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    with open(args.output, "w", encoding="utf-8") as fp:
        write_lexicon(entries, fp)
    print(f"wrote {len(entries)} words ({sum(len(e) for e in entries)} positions) to {args.output}")
    return EXIT_OK


def _prepare_line(columns: list[str], where: str) -> AlignedEntry:
    if len(columns) not in (2, 5):
        raise LexiconFormatError(
            f"{where}: expected 2 columns (word, phonemes) or 5 (plus morph, syllable, stress), got {len(columns)}"
        )
    word = columns[0]
    letters = tuple(word)
    if not letters:
        raise LexiconFormatError(f"{where}: empty word")
    raw_phonemes = tuple(p for p in columns[1].split(" ") if p)
    aligned = align(letters, raw_phonemes)
    grapheme = tuple(p != "-" for p in aligned)
    n = len(letters)
    if len(columns) == 5:
        morph_col, syll_col, stress_col = columns[2], columns[3], columns[4]
        if len(morph_col) != n or len(syll_col) != n or len(stress_col) != n:
            raise LexiconFormatError(f"{where}: annotation columns must match the letter count")
        morph = tuple(c == "1" for c in morph_col)
        syllable = tuple(c == "1" for c in syll_col)
        stress = tuple(int(c) for c in stress_col)
    else:
        morph = (True,) + (False,) * (n - 1)
        syllable = (True,) + (False,) * (n - 1)
        stress = (1,) + (0,) * (n - 1)
    try:
        return AlignedEntry(letters, aligned, morph, grapheme, syllable, stress)
    except ValueError as exc:
        raise LexiconFormatError(f"{where}: {exc}") from exc


def cmd_prepare(args: argparse.Namespace) -> int:
    try:
        raw_lines = Path(args.input).read_text("utf-8").splitlines()
    except FileNotFoundError:
        print(f"error: input file not found: {args.input}", file=sys.stderr)
        return EXIT_VALIDATION

    entries: list[AlignedEntry] = []
    rejects: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw_lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        where = f"{args.input}:{lineno}"
        columns = line.split("\t")
        word = columns[0] if columns else ""
        try:
            if word in seen:
                raise LexiconFormatError(f"{where}: duplicate word {word!r}")
            entry = _prepare_line(columns, where)
        except (LexiconFormatError, AlignmentError, ValueError) as exc:
            rejects.append((word, str(exc)))
            continue
        seen.add(word)
        entries.append(entry)

    if not entries and not rejects:
        print("error: empty input", file=sys.stderr)
        return EXIT_VALIDATION
    if entries:
        with open(args.output, "w", encoding="utf-8") as fp:
            write_lexicon(entries, fp)
    if rejects:
        reject_path = args.rejects or (args.output + ".rejects")
        with open(reject_path, "w", encoding="utf-8") as fp:
            for word, reason in rejects:
                fp.write(f"{word}\t{reason}\n")
        print(
            f"prepared {len(entries)} words, rejected {len(rejects)} (see {reject_path})",
            file=sys.stderr,
        )
        return EXIT_PARTIAL if entries else EXIT_VALIDATION
    print(f"prepared {len(entries)} words to {args.output}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    try:
        with open(args.system, encoding="utf-8") as fp:
            system = load_system(fp)
    except FileNotFoundError:
        print(f"error: system artifact not found: {args.system}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: unreadable system artifact: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    source = open(args.input, encoding="utf-8") if args.input else sys.stdin
    try:
        for line in source:
            word = line.strip()
            if not word:
                print("warning: skipping empty line", file=sys.stderr)
                continue
            pairs = system.predict_word(tuple(word))
            rendered = " ".join(f"{p}:{s}" for p, s in pairs)
            print(f"{word}\t{rendered}")
    finally:
        if args.input:
            source.close()
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        text = Path(args.artifact).read_text("utf-8")
    except FileNotFoundError:
        print(f"error: artifact not found: {args.artifact}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if text.startswith("igtree-system"):
            import io

            system = load_system(io.StringIO(text))
            print(f"system {system.spec.name} ({system.regime.value}), {len(system.modules)} modules")
            named = [(m.spec.code, m.tree) for m in system.modules]
        elif text.startswith("igtree"):
            named = [("tree", loads_tree(text))]
        else:
            raise ValueError("unrecognised artifact format")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for name, tree in named:
        stats = tree_stats(tree)
        histogram = " ".join(f"{d}:{c}" for d, c in stats.depth_histogram.items())
        print(
            f"{name}: nodes={stats.node_count} leaves={stats.leaf_count} "
            f"bytes={stats.bytes_estimate} (at 7 bytes/node) depth-histogram: {histogram}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igtree",
        description="Window-classifier word pronunciation: train, evaluate and compare module pipelines.",
    )
    parser.add_argument("--version", action="version", version=f"igtree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a deterministic toy lexicon")
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--words", type=int, default=2000)
    p_gen.add_argument("-o", "--output", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_prep = sub.add_parser("prepare", help="align a raw lexicon into the six-column format")
    p_prep.add_argument("input", help="TSV with word + space-separated phonemes (+ optional morph/syllable/stress)")
    p_prep.add_argument("-o", "--output", required=True)
    p_prep.add_argument("--rejects", help="path for rejected lines (default: OUTPUT.rejects)")
    p_prep.set_defaults(func=cmd_prepare)

    p_run = sub.add_parser("run", help="run the experiment grid from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", dest="output_dir")
    p_run.add_argument("--folds", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--workers", type=int)
    p_run.add_argument("--systems", help="comma-separated preset names, overriding the config")
    p_run.add_argument("--regimes", help="comma-separated regimes, overriding the config")
    p_run.set_defaults(func=cmd_run)

    p_pred = sub.add_parser("predict", help="convert words with a saved system artifact")
    p_pred.add_argument("system", help="path to a .igt trained-system artifact")
    p_pred.add_argument("--input", help="file with one word per line (default: stdin)")
    p_pred.set_defaults(func=cmd_predict)

    p_insp = sub.add_parser("inspect-tree", help="print size statistics of a saved artifact")
    p_insp.add_argument("artifact")
    p_insp.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Cross-validation harness, error metrics, significance tests, and reports.

Words (not windows) are the unit of partitioning: all instances of a word
stay on one side of a train/test split, so no window can straddle the
boundary.  Per-module generalisation errors are measured three ways:

* isolated: the module's task trained and tested on its bare base stream;
* ideal: trained and tested on its declared input streams taken from the
  reference lexicon (as if predecessors were flawless);
* actual: trained adaptively and tested inside the running pipeline, with
  all inputs predicted by predecessor modules.

A utility row compares a module's isolated error against its ideal and
actual errors; positive deltas mean the modular context helps.  End-to-end
quality is the joint phoneme-plus-stress error and the percentage of
flawlessly converted words.
"""

from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from scipy.stats import t as _t_dist

from .lexicon import AlignedEntry, Task, task_classes, windows
from .pipeline import (
    ModuleSpec,
    Regime,
    SystemSpec,
    TrainedModule,
    TrainedSystem,
    effective_module_spec,
    gold_context,
    module_input_tokens,
    train_module,
    train_system,
)
from .tree import NODE_BYTES


@dataclass(frozen=True)
class FoldPlan:
    """A deterministic word-level partition into n disjoint test sets."""

    n: int
    seed: int
    folds: tuple[tuple[int, ...], ...]

    def test_indices(self, k: int) -> tuple[int, ...]:
        return self.folds[k]

    def train_indices(self, k: int) -> tuple[int, ...]:
        held_out = set(self.folds[k])
        size = sum(len(f) for f in self.folds)
        return tuple(i for i in range(size) if i not in held_out)


def make_folds(count: int, n: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle word indices with the given seed and deal them into n folds."""
    if n < 2:
        raise ValueError("need at least 2 folds")
    if n > count:
        raise ValueError(f"cannot make {n} folds from {count} words")
    indices = list(range(count))
    random.Random(seed).shuffle(indices)
    folds = tuple(tuple(sorted(indices[k::n])) for k in range(n))
    return FoldPlan(n=n, seed=seed, folds=folds)


def joint_ps_error(
    predicted: Sequence[tuple[str, int]], gold: Sequence[tuple[str, int]]
) -> float:
    """Percentage of positions whose phoneme or stress marker is wrong."""
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold")
    if not gold:
        raise ValueError("empty sequences")
    wrong = sum(1 for p, g in zip(predicted, gold) if p != g)
    return 100.0 * wrong / len(gold)


def word_flawless(
    predicted: Sequence[Sequence[tuple[str, int]]],
    gold: Sequence[Sequence[tuple[str, int]]],
) -> float:
    """Percentage of words converted without any phoneme or stress error."""
    if len(predicted) != len(gold):
        raise ValueError("word count mismatch")
    if not gold:
        raise ValueError("no words")
    flawless = sum(1 for p, g in zip(predicted, gold) if tuple(p) == tuple(g))
    return 100.0 * flawless / len(gold)


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    variant: str
    zero_variance: bool = False


def t_test_one_tailed(a: Sequence[float], b: Sequence[float], variant: str = "paired") -> TTestResult:
    """One-tailed t test of mean(a) > mean(b).

    ``variant`` is "paired" (df = n-1) or "pooled" (two-sample with pooled
    variance, df = n_a + n_b - 2).  With zero variance the result is flagged
    and reported as t = 0 (p = 0.5) for equal means or t = +/-inf (p = 0 or
    1) otherwise.
    """
    if variant not in ("paired", "pooled"):
        raise ValueError(f"unknown t-test variant {variant!r}")
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 samples per group")
    if variant == "paired":
        if len(a) != len(b):
            raise ValueError("paired test needs equal-length samples")
        diffs = [x - y for x, y in zip(a, b)]
        n = len(diffs)
        mean = statistics.fmean(diffs)
        sd = statistics.stdev(diffs)
        df = n - 1
        se = sd / math.sqrt(n)
    else:
        n1, n2 = len(a), len(b)
        mean = statistics.fmean(a) - statistics.fmean(b)
        v1 = statistics.variance(a)
        v2 = statistics.variance(b)
        df = n1 + n2 - 2
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        sd = math.sqrt(pooled)
        se = sd * math.sqrt(1 / n1 + 1 / n2)
    if se == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, df=df, p=0.5, variant=variant, zero_variance=True)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t=t, df=df, p=0.0 if mean > 0 else 1.0, variant=variant, zero_variance=True)
    t = mean / se
    p = float(_t_dist.sf(t, df))
    return TTestResult(t=t, df=df, p=p, variant=variant)


@dataclass(frozen=True)
class Series:
    """Per-fold values of one metric with their mean and sample SD."""

    folds: tuple[float, ...]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.folds)

    @property
    def sd(self) -> float:
        return statistics.stdev(self.folds) if len(self.folds) > 1 else 0.0

    def to_dict(self) -> dict:
        return {"folds": list(self.folds), "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class ModuleReport:
    code: str
    base: str
    annotations: tuple[str, ...]
    instance_error: Series
    node_count: Series
    leaf_count: Series

    def to_dict(self) -> dict:
        return {
            "module": self.code,
            "base": self.base,
            "annotations": list(self.annotations),
            "instance_error": self.instance_error.to_dict(),
            "node_count": self.node_count.to_dict(),
            "leaf_count": self.leaf_count.to_dict(),
        }


END_TO_END_METRICS = ("phoneme_error", "stress_error", "joint_ps_error", "word_flawless")


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated cross-validation results of one (system, regime) cell."""

    system: str
    regime: str
    modules: tuple[ModuleReport, ...]
    end_to_end: dict[str, Series] | None

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "regime": self.regime,
            "modules": [m.to_dict() for m in self.modules],
            "end_to_end": (
                {name: series.to_dict() for name, series in self.end_to_end.items()}
                if self.end_to_end is not None
                else None
            ),
        }


@dataclass(frozen=True)
class UtilityRow:
    """One module's isolated error against its in-context errors."""

    system: str
    task: str
    base: str
    isolated: float
    ideal: float | None
    ideal_utility: float | None
    actual: float
    actual_utility: float

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "task": self.task,
            "base": self.base,
            "isolated": self.isolated,
            "ideal": self.ideal,
            "ideal_utility": self.ideal_utility,
            "actual": self.actual,
            "actual_utility": self.actual_utility,
        }


# ---------------------------------------------------------------------------
# Per-fold evaluation


@dataclass(frozen=True)
class _ModuleNumbers:
    instance_error: float
    node_count: int
    leaf_count: int


@dataclass(frozen=True)
class _FoldOutcome:
    fold: int
    cells: dict
    isolated_tasks: dict


def _module_error_on_gold(
    module: TrainedModule,
    test: Sequence[AlignedEntry],
    test_contexts: Sequence[Mapping[str, Sequence]],
) -> float:
    wrong = 0
    total = 0
    for entry, ctx in zip(test, test_contexts):
        tokens = module_input_tokens(module.spec, ctx)
        gold = task_classes(entry, module.spec.task)
        for features, cls in zip(windows(tokens), gold):
            wrong += module.tree.classify(features) != cls
            total += 1
    return 100.0 * wrong / total


def _pairs_from_classes(
    spec: SystemSpec, classes: Mapping[str, Sequence[str]]
) -> list[tuple[str, int]]:
    from .lexicon import split_ps

    phonemes = stress = None
    gs = None
    for m in spec.modules:
        if m.task is Task.GS:
            gs = classes[m.code]
        elif m.task is Task.G:
            phonemes = classes[m.code]
        elif m.task is Task.S:
            stress = classes[m.code]
    if gs is not None and (phonemes is None or stress is None):
        return [split_ps(c) for c in gs]
    return [(p, int(s)) for p, s in zip(phonemes, stress)]


def _system_numbers(
    system: TrainedSystem, test: Sequence[AlignedEntry]
) -> tuple[list[_ModuleNumbers], dict[str, float]]:
    """Cascaded per-module errors and end-to-end metrics on test words."""
    spec = system.spec
    wrong = [0] * len(spec.modules)
    total = 0
    predicted_words = []
    gold_words = []
    for entry in test:
        classes = system.predict_classes(entry.letters)
        total += len(entry)
        for k, mspec in enumerate(spec.modules):
            gold = task_classes(entry, mspec.task)
            wrong[k] += sum(1 for p, g in zip(classes[mspec.code], gold) if p != g)
        predicted_words.append(_pairs_from_classes(spec, classes))
        gold_words.append(list(zip(entry.phonemes, entry.stress)))

    modules = [
        _ModuleNumbers(
            instance_error=100.0 * wrong[k] / total,
            node_count=system.modules[k].tree.node_count,
            leaf_count=system.modules[k].tree.leaf_count,
        )
        for k in range(len(spec.modules))
    ]
    phoneme_wrong = stress_wrong = joint_wrong = 0
    for pred, gold in zip(predicted_words, gold_words):
        for (pp, ps), (gp, gs) in zip(pred, gold):
            phoneme_wrong += pp != gp
            stress_wrong += ps != gs
            joint_wrong += (pp != gp) or (ps != gs)
    end_to_end = {
        "phoneme_error": 100.0 * phoneme_wrong / total,
        "stress_error": 100.0 * stress_wrong / total,
        "joint_ps_error": 100.0 * joint_wrong / total,
        "word_flawless": word_flawless(predicted_words, gold_words),
    }
    return modules, end_to_end


def _isolated_task_specs(systems: Sequence[SystemSpec]) -> list[ModuleSpec]:
    """Bare baseline tasks needed to measure utility for the given systems."""
    specs: dict[tuple, ModuleSpec] = {}
    for system in systems:
        for m in system.modules:
            if m.task is Task.GS:
                for extra in (ModuleSpec(Task.G, "letters"), ModuleSpec(Task.S, "letters")):
                    specs[(extra.task.value, extra.base)] = extra
            bare = m.bare()
            specs[(bare.task.value, bare.base)] = bare
    return [specs[key] for key in sorted(specs)]


def _evaluate_fold(
    entries: Sequence[AlignedEntry],
    systems: Sequence[SystemSpec],
    regimes: Sequence[Regime],
    plan: FoldPlan,
    k: int,
) -> _FoldOutcome:
    train = [entries[i] for i in plan.train_indices(k)]
    test = [entries[i] for i in plan.test_indices(k)]
    train_ctx = [gold_context(e) for e in train]
    test_ctx = [gold_context(e) for e in test]

    gold_modules: dict[tuple, TrainedModule] = {}

    def gold_module(mspec: ModuleSpec) -> TrainedModule:
        key = (mspec.task.value, mspec.base, mspec.annotations)
        if key not in gold_modules:
            gold_modules[key] = train_module(mspec, train, train_ctx)
        return gold_modules[key]

    def gold_numbers(mspec: ModuleSpec) -> _ModuleNumbers:
        module = gold_module(mspec)
        return _ModuleNumbers(
            instance_error=_module_error_on_gold(module, test, test_ctx),
            node_count=module.tree.node_count,
            leaf_count=module.tree.leaf_count,
        )

    cells: dict = {}
    for system in systems:
        for regime in regimes:
            if regime is Regime.ADAPTIVE:
                trained = train_system(system, train, Regime.ADAPTIVE)
                modules, end_to_end = _system_numbers(trained, test)
            elif regime is Regime.IDEAL:
                specs = [effective_module_spec(m, regime) for m in system.modules]
                modules = [gold_numbers(s) for s in specs]
                trained = TrainedSystem(system, regime, tuple(gold_module(s) for s in specs))
                _, end_to_end = _system_numbers(trained, test)
            else:  # isolated: per-task baselines only, no honest cascade
                specs = [effective_module_spec(m, regime) for m in system.modules]
                modules = [gold_numbers(s) for s in specs]
                end_to_end = None
            cells[(system.name, regime.value)] = (modules, end_to_end)

    isolated_tasks = {}
    if Regime.ISOLATED in regimes:
        for mspec in _isolated_task_specs(systems):
            isolated_tasks[(mspec.task.value, mspec.base)] = gold_numbers(mspec)
    return _FoldOutcome(fold=k, cells=cells, isolated_tasks=isolated_tasks)


# ---------------------------------------------------------------------------
# Experiment orchestration


@dataclass(frozen=True)
class SizeRow:
    system: str
    regime: str
    module: str
    mean_nodes: float
    mean_leaves: float
    bytes_estimate: float

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "regime": self.regime,
            "module": self.module,
            "mean_nodes": self.mean_nodes,
            "mean_leaves": self.mean_leaves,
            "bytes_estimate": self.bytes_estimate,
        }


@dataclass(frozen=True)
class TTestRow:
    regime: str
    metric: str
    a: str
    b: str
    result: TTestResult

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "metric": self.metric,
            "a": self.a,
            "b": self.b,
            "variant": self.result.variant,
            "t": self.result.t,
            "df": self.result.df,
            "p": self.result.p,
            "zero_variance": self.result.zero_variance,
        }


@dataclass(frozen=True)
class ExperimentResult:
    """Everything one run produces, before formatting."""

    systems: tuple[SystemSpec, ...]
    regimes: tuple[Regime, ...]
    plan: FoldPlan
    cells: dict[tuple[str, str], MetricsReport]
    isolated_tasks: dict[tuple[str, str], ModuleReport]
    utility: tuple[UtilityRow, ...]
    ttests: tuple[TTestRow, ...]
    sizes: tuple[SizeRow, ...]


def _aggregate_cell(
    system: SystemSpec, regime: Regime, outcomes: Sequence[_FoldOutcome]
) -> MetricsReport:
    per_fold = [o.cells[(system.name, regime.value)] for o in outcomes]
    modules = []
    for k, mspec in enumerate(system.modules):
        shown = effective_module_spec(mspec, regime)
        modules.append(
            ModuleReport(
                code=shown.code,
                base=shown.base,
                annotations=shown.annotations,
                instance_error=Series(tuple(p[0][k].instance_error for p in per_fold)),
                node_count=Series(tuple(float(p[0][k].node_count) for p in per_fold)),
                leaf_count=Series(tuple(float(p[0][k].leaf_count) for p in per_fold)),
            )
        )
    end_to_end = None
    if per_fold[0][1] is not None:
        end_to_end = {
            name: Series(tuple(p[1][name] for p in per_fold)) for name in END_TO_END_METRICS
        }
    return MetricsReport(
        system=system.name, regime=regime.value, modules=tuple(modules), end_to_end=end_to_end
    )


def _utility_rows(
    systems: Sequence[SystemSpec],
    cells: Mapping[tuple[str, str], MetricsReport],
    isolated_tasks: Mapping[tuple[str, str], ModuleReport],
) -> list[UtilityRow]:
    rows = []
    for system in systems:
        ideal = cells[(system.name, Regime.IDEAL.value)]
        actual = cells[(system.name, Regime.ADAPTIVE.value)]
        for k, mspec in enumerate(system.modules):
            if mspec.task is Task.GS:
                # The single combined module is scored on its phoneme and
                # stress outputs separately, against letter-based baselines.
                for task, metric in ((Task.G, "phoneme_error"), (Task.S, "stress_error")):
                    isolated = isolated_tasks[(task.value, "letters")].instance_error.mean
                    contextual = actual.end_to_end[metric].mean
                    rows.append(
                        UtilityRow(
                            system=system.name,
                            task=task.value,
                            base="letters",
                            isolated=isolated,
                            ideal=None,
                            ideal_utility=None,
                            actual=contextual,
                            actual_utility=isolated - contextual,
                        )
                    )
                continue
            isolated = isolated_tasks[(mspec.task.value, mspec.base)].instance_error.mean
            ideal_err = ideal.modules[k].instance_error.mean
            actual_err = actual.modules[k].instance_error.mean
            rows.append(
                UtilityRow(
                    system=system.name,
                    task=mspec.task.value,
                    base=mspec.base,
                    isolated=isolated,
                    ideal=ideal_err,
                    ideal_utility=isolated - ideal_err,
                    actual=actual_err,
                    actual_utility=isolated - actual_err,
                )
            )
    return rows


def _ttest_rows(
    systems: Sequence[SystemSpec],
    regimes: Sequence[Regime],
    cells: Mapping[tuple[str, str], MetricsReport],
) -> list[TTestRow]:
    rows = []
    for regime in regimes:
        if regime is Regime.ISOLATED:
            continue
        with_ps = [s for s in systems if cells[(s.name, regime.value)].end_to_end is not None]
        for i in range(len(with_ps)):
            for j in range(i + 1, len(with_ps)):
                a = cells[(with_ps[i].name, regime.value)].end_to_end["joint_ps_error"].folds
                b = cells[(with_ps[j].name, regime.value)].end_to_end["joint_ps_error"].folds
                for variant in ("paired", "pooled"):
                    rows.append(
                        TTestRow(
                            regime=regime.value,
                            metric="joint_ps_error",
                            a=with_ps[i].name,
                            b=with_ps[j].name,
                            result=t_test_one_tailed(a, b, variant),
                        )
                    )
    return rows


def _size_rows(
    systems: Sequence[SystemSpec],
    regimes: Sequence[Regime],
    cells: Mapping[tuple[str, str], MetricsReport],
) -> list[SizeRow]:
    rows = []
    for system in systems:
        for regime in regimes:
            report = cells[(system.name, regime.value)]
            total_nodes = total_leaves = 0.0
            for m in report.modules:
                rows.append(
                    SizeRow(
                        system=system.name,
                        regime=regime.value,
                        module=m.code,
                        mean_nodes=m.node_count.mean,
                        mean_leaves=m.leaf_count.mean,
                        bytes_estimate=m.node_count.mean * NODE_BYTES,
                    )
                )
                total_nodes += m.node_count.mean
                total_leaves += m.leaf_count.mean
            rows.append(
                SizeRow(
                    system=system.name,
                    regime=regime.value,
                    module="total",
                    mean_nodes=total_nodes,
                    mean_leaves=total_leaves,
                    bytes_estimate=total_nodes * NODE_BYTES,
                )
            )
    return rows


def run_experiment(
    entries: Sequence[AlignedEntry],
    systems: Sequence[SystemSpec],
    regimes: Sequence[Regime],
    plan: FoldPlan,
    workers: int = 1,
) -> ExperimentResult:
    """Evaluate all (system, regime) cells over shared folds.

    Folds are independent and can run in parallel processes (``workers``).
    The utility table is produced when the isolated, ideal and adaptive
    regimes are all requested.
    """
    if not entries:
        raise ValueError("empty lexicon")
    if not systems:
        raise ValueError("no systems to evaluate")
    if not regimes:
        raise ValueError("no regimes to evaluate")

    fold_ids = list(range(plan.n))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    _evaluate_fold,
                    [entries] * plan.n,
                    [systems] * plan.n,
                    [regimes] * plan.n,
                    [plan] * plan.n,
                    fold_ids,
                )
            )
    else:
        outcomes = [_evaluate_fold(entries, systems, regimes, plan, k) for k in fold_ids]
    outcomes.sort(key=lambda o: o.fold)

    cells = {
        (system.name, regime.value): _aggregate_cell(system, regime, outcomes)
        for system in systems
        for regime in regimes
    }
    isolated_tasks: dict[tuple[str, str], ModuleReport] = {}
    for key in sorted(outcomes[0].isolated_tasks):
        task, base = key
        isolated_tasks[key] = ModuleReport(
            code=task,
            base=base,
            annotations=(),
            instance_error=Series(tuple(o.isolated_tasks[key].instance_error for o in outcomes)),
            node_count=Series(tuple(float(o.isolated_tasks[key].node_count) for o in outcomes)),
            leaf_count=Series(tuple(float(o.isolated_tasks[key].leaf_count) for o in outcomes)),
        )

    have_all = {Regime.ISOLATED, Regime.IDEAL, Regime.ADAPTIVE}.issubset(set(regimes))
    utility = tuple(_utility_rows(systems, cells, isolated_tasks)) if have_all else ()
    ttests = tuple(_ttest_rows(systems, regimes, cells))
    sizes = tuple(_size_rows(systems, regimes, cells))
    return ExperimentResult(
        systems=tuple(systems),
        regimes=tuple(regimes),
        plan=plan,
        cells=cells,
        isolated_tasks=isolated_tasks,
        utility=utility,
        ttests=ttests,
        sizes=sizes,
    )


def run_cv(
    spec: SystemSpec,
    entries: Sequence[AlignedEntry],
    regime: Regime,
    plan: FoldPlan,
    workers: int = 1,
) -> MetricsReport:
    """Cross-validate one system under one regime."""
    result = run_experiment(entries, [spec], [regime], plan, workers=workers)
    return result.cells[(spec.name, regime.value)]

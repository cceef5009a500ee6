"""Modular word-pronunciation systems built from chained window classifiers.

A system is an ordered list of modules, each classifying windows over a
base stream (letters, or the phoneme stream produced by an earlier module)
merged with boundary annotations produced by earlier modules.  Three preset
architectures are provided:

* MAGYS: morpheme boundaries -> grapheme boundaries -> phonemes ->
  syllable boundaries -> stress markers, each module consuming outputs of
  its predecessors;
* MGS: morpheme boundaries -> phonemes -> stress markers;
* GS: a single module mapping letter windows straight to combined
  phoneme-plus-stress classes.

Training regimes differ in where a module's *input* streams come from:

* isolated: bare reference base streams, no predecessor annotations; a
  per-task baseline;
* ideal: the module's declared input streams, taken from the reference
  lexicon (as if every predecessor were flawless);
* adaptive: predecessor outputs predicted on the training words
  themselves, so a module can learn to repair consistent upstream errors.

At conversion time a trained system always feeds each module the predicted
outputs of its predecessors; the regimes only change what the trees were
trained on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .lexicon import (
    AlignedEntry,
    StreamSpec,
    Task,
    WindowSpec,
    composite_tokens,
    entry_streams,
    split_ps,
    task_classes,
    windows,
)
from .tree import FeatureOrder, IgTree, InstanceBase, build_tree, compute_feature_order

# Which module task produces each named annotation stream.
ANNOTATION_PRODUCER = {"morph": Task.M, "grapheme": Task.A, "syllable": Task.Y}
PHONEME_PRODUCERS = (Task.G, Task.GS)
STRESS_PRODUCERS = (Task.S, Task.GS)


class Regime(Enum):
    ISOLATED = "isolated"
    IDEAL = "ideal"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class ModuleSpec:
    """One module: its task and the streams it consumes."""

    task: Task
    base: str = "letters"
    annotations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        # Normalise through StreamSpec validation (canonical annotation order).
        spec = StreamSpec(self.base, tuple(self.annotations))
        object.__setattr__(self, "annotations", spec.annotations)

    @property
    def code(self) -> str:
        return self.task.value

    @property
    def stream(self) -> StreamSpec:
        return StreamSpec(self.base, self.annotations)

    def bare(self) -> "ModuleSpec":
        """The isolated-input variant: same task and base, no annotations."""
        return ModuleSpec(self.task, self.base, ())


@dataclass(frozen=True)
class SystemSpec:
    """An ordered, validated module pipeline."""

    name: str
    modules: tuple[ModuleSpec, ...]

    def __post_init__(self) -> None:
        if not self.modules:
            raise ValueError(f"system {self.name!r} has no modules")
        produced_annotations: set[str] = set()
        phonemes_available = False
        for m in self.modules:
            if m.base == "phonemes" and not phonemes_available:
                raise ValueError(
                    f"system {self.name!r}: module {m.code} consumes phonemes before any module produces them"
                )
            missing = [a for a in m.annotations if a not in produced_annotations]
            if missing:
                raise ValueError(
                    f"system {self.name!r}: module {m.code} consumes {missing} before they are produced"
                )
            for annotation, producer in ANNOTATION_PRODUCER.items():
                if m.task is producer:
                    produced_annotations.add(annotation)
            if m.task in PHONEME_PRODUCERS:
                phonemes_available = True
        tasks = [m.task for m in self.modules]
        if not any(t in PHONEME_PRODUCERS for t in tasks) or not any(t in STRESS_PRODUCERS for t in tasks):
            raise ValueError(f"system {self.name!r} must end up producing phonemes and stress markers")

    def module_index(self, task: Task) -> int:
        for i, m in enumerate(self.modules):
            if m.task is task:
                return i
        raise KeyError(task)


PRESETS: dict[str, SystemSpec] = {
    "MAGYS": SystemSpec(
        "MAGYS",
        (
            ModuleSpec(Task.M, "letters"),
            ModuleSpec(Task.A, "letters", ("morph",)),
            ModuleSpec(Task.G, "letters", ("morph", "grapheme")),
            ModuleSpec(Task.Y, "phonemes", ("morph",)),
            ModuleSpec(Task.S, "phonemes", ("morph", "syllable")),
        ),
    ),
    "MGS": SystemSpec(
        "MGS",
        (
            ModuleSpec(Task.M, "letters"),
            ModuleSpec(Task.G, "letters", ("morph",)),
            ModuleSpec(Task.S, "phonemes", ("morph",)),
        ),
    ),
    "GS": SystemSpec("GS", (ModuleSpec(Task.GS, "letters"),)),
}


@dataclass(frozen=True)
class TrainedModule:
    spec: ModuleSpec
    tree: IgTree


@dataclass(frozen=True)
class TrainedSystem:
    """A system with one trained tree per module; immutable once built."""

    spec: SystemSpec
    regime: Regime
    modules: tuple[TrainedModule, ...]

    def __post_init__(self) -> None:
        if len(self.modules) != len(self.spec.modules):
            raise ValueError("trained module count disagrees with system spec")

    def predict_classes(self, letters: Sequence[str]) -> dict[str, tuple[str, ...]]:
        """Run the module cascade over one word.

        Returns the predicted class sequence of every module, keyed by
        module code.  Each module consumes the predictions of its
        predecessors; unseen feature values fall back on tree defaults, so
        any non-empty word is convertible.
        """
        if len(letters) == 0:
            raise ValueError("cannot convert an empty word")
        ctx: dict[str, tuple] = {"letters": tuple(letters)}
        out: dict[str, tuple[str, ...]] = {}
        for module in self.modules:
            tokens = module_input_tokens(module.spec, ctx)
            tree = module.tree
            predicted = tuple(tree.classify(w) for w in windows(tokens))
            out[module.spec.code] = predicted
            _propagate_into(ctx, module.spec.task, predicted)
        return out

    def predict_word(self, letters: Sequence[str]) -> list[tuple[str, int]]:
        """Convert a word to (phoneme, stress) pairs, one per letter."""
        classes = self.predict_classes(letters)
        last_gs = None
        phonemes: tuple[str, ...] | None = None
        stress: tuple[str, ...] | None = None
        for module in self.spec.modules:
            if module.task is Task.GS:
                last_gs = classes[module.code]
            elif module.task is Task.G:
                phonemes = classes[module.code]
            elif module.task is Task.S:
                stress = classes[module.code]
        if last_gs is not None and (phonemes is None or stress is None):
            pairs = [split_ps(token) for token in last_gs]
            return pairs
        assert phonemes is not None and stress is not None  # guaranteed by SystemSpec
        return [(p, int(s)) for p, s in zip(phonemes, stress)]


def module_input_tokens(spec: ModuleSpec, ctx: Mapping[str, Sequence]) -> tuple[str, ...]:
    """Composite input tokens of a module given the available streams."""
    base = ctx.get(spec.base)
    if base is None:
        raise ValueError(f"module {spec.code} input stream {spec.base!r} is unavailable")
    for a in spec.annotations:
        if ctx.get(a) is None:
            raise ValueError(f"module {spec.code} annotation stream {a!r} is unavailable")
    return composite_tokens(base, ctx, spec.annotations)


def propagate_stream(task: Task, classes: Sequence[str], length: int) -> tuple:
    """Convert a module's class sequence into the stream consumers read.

    Boundary tasks yield boolean flag sequences; the phoneme task yields the
    predicted phoneme tokens (nulls kept so positions stay letter-aligned).
    """
    if len(classes) != length:
        raise ValueError(f"{task.value} produced {len(classes)} classes for {length} positions")
    if task in (Task.M, Task.A, Task.Y):
        return tuple(c == "1" for c in classes)
    if task is Task.G:
        return tuple(classes)
    if task is Task.S:
        return tuple(classes)
    if task is Task.GS:
        return tuple(classes)
    raise ValueError(f"unknown task {task!r}")


def _propagate_into(ctx: dict[str, tuple], task: Task, classes: tuple[str, ...]) -> None:
    length = len(ctx["letters"])
    stream = propagate_stream(task, classes, length)
    if task is Task.M:
        ctx["morph"] = stream
    elif task is Task.A:
        ctx["grapheme"] = stream
    elif task is Task.Y:
        ctx["syllable"] = stream
    elif task is Task.G:
        ctx["phonemes"] = stream
    elif task is Task.GS:
        pairs = [split_ps(token) for token in classes]
        ctx["phonemes"] = tuple(p for p, _ in pairs)
    # Task.S output is terminal; nothing downstream consumes it.


def gold_context(entry: AlignedEntry) -> dict[str, tuple]:
    return dict(entry_streams(entry))


def effective_module_spec(spec: ModuleSpec, regime: Regime) -> ModuleSpec:
    """Isolated training strips predecessor annotations from the input."""
    return spec.bare() if regime is Regime.ISOLATED else spec


def module_instance_base(
    spec: ModuleSpec,
    entries: Sequence[AlignedEntry],
    contexts: Sequence[Mapping[str, Sequence]],
    window: WindowSpec = WindowSpec(),
) -> InstanceBase:
    """Windowed instances for one module over per-entry input streams."""
    base = InstanceBase(window.arity)
    for entry, ctx in zip(entries, contexts):
        tokens = module_input_tokens(spec, ctx)
        for features, cls in zip(windows(tokens, window), task_classes(entry, spec.task)):
            base.add(features, cls)
    return base


def train_module(
    spec: ModuleSpec,
    entries: Sequence[AlignedEntry],
    contexts: Sequence[Mapping[str, Sequence]],
) -> TrainedModule:
    base = module_instance_base(spec, entries, contexts)
    order = compute_feature_order(base)
    return TrainedModule(spec, build_tree(base, order))


Predictor = Callable[[TrainedModule, Sequence[AlignedEntry], Sequence[Mapping[str, Sequence]]], list[tuple[str, ...]]]


def _predict_on_entries(
    module: TrainedModule,
    entries: Sequence[AlignedEntry],
    contexts: Sequence[Mapping[str, Sequence]],
) -> list[tuple[str, ...]]:
    out = []
    for ctx in contexts:
        tokens = module_input_tokens(module.spec, ctx)
        out.append(tuple(module.tree.classify(w) for w in windows(tokens)))
    return out


def train_system(
    spec: SystemSpec,
    entries: Sequence[AlignedEntry],
    regime: Regime,
    predictor: Predictor | None = None,
) -> TrainedSystem:
    """Train every module of a system in pipeline order.

    Under the adaptive regime each module is trained on streams annotated
    with its predecessors' predictions for the same training words;
    ``predictor`` can replace the prediction step (e.g. with an oracle that
    returns reference values, which makes adaptive training coincide with
    ideal training).  Under the other regimes modules train on reference
    streams.
    """
    if not entries:
        raise ValueError("empty training set")
    if regime is not Regime.ADAPTIVE:
        contexts = [gold_context(e) for e in entries]
        modules = tuple(
            train_module(effective_module_spec(m, regime), entries, contexts) for m in spec.modules
        )
        return TrainedSystem(spec, regime, modules)

    predict = predictor or _predict_on_entries
    contexts = [{"letters": e.letters} for e in entries]
    trained: list[TrainedModule] = []
    for k, mspec in enumerate(spec.modules):
        module = train_module(mspec, entries, contexts)
        trained.append(module)
        if _is_consumed_later(spec, k):
            predictions = predict(module, entries, contexts)
            for ctx, entry, classes in zip(contexts, entries, predictions):
                _propagate_into_entry(ctx, mspec.task, classes, len(entry))
    return TrainedSystem(spec, regime, tuple(trained))


def _propagate_into_entry(ctx: dict, task: Task, classes: Sequence[str], length: int) -> None:
    stream = propagate_stream(task, tuple(classes), length)
    if task is Task.M:
        ctx["morph"] = stream
    elif task is Task.A:
        ctx["grapheme"] = stream
    elif task is Task.Y:
        ctx["syllable"] = stream
    elif task is Task.G:
        ctx["phonemes"] = stream
    elif task is Task.GS:
        ctx["phonemes"] = tuple(split_ps(t)[0] for t in classes)


def _is_consumed_later(spec: SystemSpec, k: int) -> bool:
    task = spec.modules[k].task
    for later in spec.modules[k + 1 :]:
        if later.base == "phonemes" and task in PHONEME_PRODUCERS:
            return True
        for a in later.annotations:
            if ANNOTATION_PRODUCER[a] is task:
                return True
    return False


def oracle_predictor(
    module: TrainedModule,
    entries: Sequence[AlignedEntry],
    contexts: Sequence[Mapping[str, Sequence]],
) -> list[tuple[str, ...]]:
    """A perfect predecessor: returns the reference classes of each entry."""
    return [task_classes(e, module.spec.task) for e in entries]


_SYSTEM_MAGIC = "igtree-system"
_SYSTEM_VERSION = 1


def dump_system(system: TrainedSystem, fp) -> None:
    """Write a trained system as a self-contained text artifact."""
    fp.write(f"{_SYSTEM_MAGIC} {_SYSTEM_VERSION}\n")
    fp.write(f"name {system.spec.name}\n")
    fp.write(f"regime {system.regime.value}\n")
    fp.write(f"modules {len(system.modules)}\n")
    from .tree import dump_tree

    for module in system.modules:
        annotations = ",".join(module.spec.annotations) or "-"
        fp.write(f"module {module.spec.code} {module.spec.base} {annotations}\n")
        dump_tree(module.tree, fp)


def load_system(fp) -> TrainedSystem:
    """Parse a trained-system artifact written by :func:`dump_system`."""
    from .tree import load_tree

    magic = fp.readline().rstrip("\n").split(" ")
    if magic[0] != _SYSTEM_MAGIC:
        raise ValueError(f"not a trained-system artifact (magic {magic[0]!r})")
    if magic[1:] != [str(_SYSTEM_VERSION)]:
        raise ValueError(f"unsupported artifact version {magic[1:]}")
    name = fp.readline().rstrip("\n").removeprefix("name ")
    regime = Regime(fp.readline().rstrip("\n").removeprefix("regime "))
    n_modules = int(fp.readline().rstrip("\n").removeprefix("modules "))
    specs = []
    trained = []
    for _ in range(n_modules):
        header = fp.readline().rstrip("\n").split(" ")
        if len(header) != 4 or header[0] != "module":
            raise ValueError(f"malformed module header {header!r}")
        _, code, base, annotations_s = header
        annotations = tuple(annotations_s.split(",")) if annotations_s != "-" else ()
        spec = ModuleSpec(Task(code), base, annotations)
        specs.append(spec)
        trained.append(TrainedModule(spec, load_tree(fp)))
    return TrainedSystem(SystemSpec(name, tuple(specs)), regime, tuple(trained))

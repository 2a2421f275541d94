"""Python bindings for the chartevo chart-pattern search core."""

import json

from ._chartevo import (  # noqa: F401
    ConfigError,
    Corpus,
    Dataset,
    FormatError,
    Phenotype,
    StructuralError,
    __version__,
    load_corpus,
    penalty,
    save_corpus,
)
from . import _chartevo as _core


def _dump(config):
    return "" if config is None else json.dumps(config)


def synth(config=None):
    """Generate synthetic series. Returns (series, ground_truth) where series is a list of
    (instrument_id, dates, closes)."""
    series, truth = _core._synth(_dump(config))
    return series, json.loads(truth)


def build_corpus(series, config=None):
    """series: iterable of (instrument_id, iso dates, closes)."""
    return _core._build_corpus(list(series), _dump(config))


def random_genome(seed):
    """A minimal fully connected CPPN with random weights, as a dict."""
    return json.loads(_core._random_genome(seed))


def express(genome, substrate="network", scaling="he", activation="relu"):
    return _core._express(json.dumps(genome), substrate, scaling, activation)


def fitness(phenotype, dataset, k=20, alpha=100000.0):
    return json.loads(_core._fitness(phenotype, dataset, k, alpha))


def phenotype_to_dict(phenotype):
    return json.loads(phenotype._to_json())


def phenotype_from_dict(doc):
    return Phenotype._from_json(json.dumps(doc))


def run_search(corpus, config=None):
    """Full search. Returns (report dict, selected Phenotype)."""
    report, phenotype = _core._run_search(corpus, _dump(config))
    return json.loads(report), phenotype

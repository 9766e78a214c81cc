"""Lattice rescoring with large ensembles of sequence scorers."""

from .arpa import NgramTable, parse_arpa, write_arpa
from .context import ContextPolicy, SessionContext, context_state, \
    rescore_session
from .ensemble import (IterationSchedule, IterationStep, IterationTrace,
                       combine_rescored, combine_simultaneous,
                       compare_methods, run_iterative)
from .errors import (FormatError, LatticeError, ProtocolError, ScorerError,
                     SessionError, ToolkitError)
from .external import ExternalScorer
from .lattice import (EPSILON, Arc, Lattice, Path, enumerate_paths,
                      make_lattice, reverse, synth_lattice, topo_order,
                      validate)
from .nbest import (NBestEntry, NBestList, extract_nbest, read_nbest,
                    rescore_nbest, rescore_nbest_session, write_nbest)
from .pushforward import (Hypothesis, RescoredLattice, RescoreParams,
                          best_path, extend, interpolation_weight,
                          lattice_best_path, path_score, refine_arc_lm,
                          rescore_lattice)
from .scoring import (MockScorer, NgramScorer, SequenceScorer, TableScorer,
                      perplexity, score_sequence, uniform_scorer)
from .sessions import LatticeSession, SessionEntry, load_session
from .slf import parse_slf, write_slf
from .wer import (WerCounts, corpus_wer, format_report_tsv, oracle_wer,
                  relative_reduction, wer)

__version__ = "0.1.0"

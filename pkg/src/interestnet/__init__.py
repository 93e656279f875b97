"""Topic, user-interest and community inference for social-interaction records."""
from .cipm import (CipmState, assign_communities, community_threshold, estimate_cipm, gibbs_sweep_cipm,
                   init_cipm, low_evidence_users, mention_similarity_report)
from .corpus import (Corpus, InteractionRecord, Vocabulary, build_corpus, load_corpus, parse_records,
                     tokenize, top_word_frequencies, write_records)
from .errors import EmptyCorpusError, EmptyInputError, InternalConsistencyError
from .estimate import ModelEstimate, top_words
from .evaluation import (SplitSpec, community_sweep, fold_in, heldout_perplexity, k_sweep, match_topics,
                         perplexity, split_corpus, total_variation)
from .graph import (InteractionGraph, build_graph, degree_distribution, fit_power_law, graph_metrics,
                    largest_connected_component, node_metrics)
from .ipm import IpmState, estimate_ipm, gibbs_sweep_ipm, init_ipm
from .models import train
from .sampler import Hyperparams
from .uipm import UipmState, estimate_uipm, gibbs_sweep_uipm, init_uipm, top_users, user_similarity

__version__ = "0.1.0"

"""FedWalk: federated, differentially private random-walk node embedding."""

__version__ = "0.1.0"

from .graph import DeviceView, Graph, LabelSet, device_views, load_edge_list, load_labels
from .hct import Hct, build_hct, dissimilarity_matrix, dtw_dissimilarity, noise_inflation_bound, theorem1_bound
from .walker import CommStats, WalkConfig, WalkSequence, expected_messages, expected_savings, run_walk
from .embedding import EmbeddingMatrix, SkipGramConfig, train
from .evaluation import macro_f1, micro_f1
from .federation import RunConfig, run_hct_protocol, run_pipeline, run_walk_protocol

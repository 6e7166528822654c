"""Spring-force node embeddings for signed graphs.

Pipeline: load a signed edge list, hide a share of the signs, simulate a
learnable spring system until the node positions settle, then predict hidden
edge signs from endpoint distances.  Force parameters are trained by
differentiating through the unrolled simulation.
"""

__version__ = "0.1.0"

from .forces import (ForceParams, MlpParams, NeuralSpringParams, SpringParams,
                     init_params, mlp_eval, neural_force, neural_gain,
                     params_from_json, params_to_json, spring_force, spring_gain)
from .forcefield import FieldContext, edge_force, force_field, pair_distance, prepare
from .graphs import (EdgeStage, GraphFormatError, NodeStatics, SignedGraph,
                     SplitSpec, compute_node_statics, dump_graph, hide_signs,
                     load_edge_list, parse_graph_dump, stage_back, to_undirected)
from .metrics import (MetricsReport, PredictionSet, auc, calibrate_on_visible,
                      evaluate, f1_scores, fit_distance_calibration, predict,
                      rank_auc)
from .simulate import (SimConfig, SimState, SimulationDivergedError, embeddings,
                       init_state, read_embeddings_binary, read_embeddings_text,
                       simulate, step, write_embeddings_binary, write_embeddings_text)
from .training import (AdamState, Checkpoint, EpochStats, LossConfig, TrainConfig,
                       adam_step, clip_gradient, load_checkpoint, loss,
                       loss_and_grad, predict_prob, save_checkpoint, train)

"""Graph analytics for app-labeled location trails.

Trails are snapped to points of interest, turned into a hotspot network
with transition probabilities, split into affinity subnetworks by Markov
clustering, and mined for visiting orders and flow capacities.
"""

from .clustering import (
    AffinitySubnetwork,
    Clustering,
    MclParams,
    contract,
    initial_distribution,
    kmeans_cluster,
    markov_cluster,
    mcl_step,
)
from .core import (
    GeoPoint,
    HotspotGraph,
    Metatrail,
    Poi,
    TrailPoint,
    TransitionMatrix,
    Visit,
    VisitSequence,
    graph_from_edge_list,
    in_weight,
    out_weight,
)
from .errors import TrailParseError, UnknownVertexError, ValidationError
from .flow import check_capacity_bounds, direction_report, max_flow
from .hotspot import build_hotspot_network, build_transition_matrix, trace_tree, transition_graph
from .ingest import SnapConfig, parse_trails, snap_trail, visit_frequency
from .patterns import SequentialPattern, mine_inter_patterns, mine_intra_patterns, project_trail

__version__ = "0.1.0"

"""
Approximate Minimum Spanning Forest Weight

Edge weights lie in [1, W]. With thresholds t_i = (1 + eps)^i for
i = 0..r, r = ceil(log_{1+eps} W), layer i sketches G_i, the subgraph of
edges with weight <= t_i. From the component counts c_i = cc(G_i):

    estimate = n - c_r * t_r + sum_{i<r} (t_{i+1} - t_i) * c_i

which lies in [w(F), (1 + eps) * w(F)] for the minimum spanning forest F
(for a connected graph c_r = 1 and this is the usual formula). A
unit-weight tree gives exactly n - 1.
"""
import logging
import math
from dataclasses import dataclass, field

from src.analytics.connectivity import boruvka_extract
from src.em.block_device import IoStats
from src.ingest.ingestion import IngestState, split_layers
from src.ingest.schemes import GraphScheme, mst_layer_filter
from src.utils.errors import InvalidParamsError, StreamFormatError

logger = logging.getLogger(__name__)

MST_TAG = 9


@dataclass(frozen=True)
class MstConfig:
    """
    Args:
        epsilon: Accuracy
        max_weight: W, the largest weight the stream may carry
    """
    epsilon: float = 0.25
    max_weight: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidParamsError(f"epsilon must be positive (got {self.epsilon})")
        if self.max_weight < 1:
            raise InvalidParamsError(f"max weight must be >= 1 (got {self.max_weight})")

    @property
    def num_thresholds(self):
        """r, so thresholds run t_0..t_r"""
        if self.max_weight == 1:
            return 0
        return max(0, math.ceil(math.log(self.max_weight) / math.log1p(self.epsilon) - 1e-12))

    @property
    def thresholds(self):
        return [(1 + self.epsilon) ** i for i in range(self.num_thresholds + 1)]

    @property
    def sigmas(self):
        """sigma_i = t_i - t_{i-1} for i = 1..r"""
        t = self.thresholds
        return [t[i] - t[i - 1] for i in range(1, len(t))]

    def check_weight(self, weight):
        if not 1 <= weight <= self.max_weight:
            raise StreamFormatError(f"edge weight {weight} outside [1, {self.max_weight}]")

    def estimate(self, num_vertices, components):
        """Forest-weight estimate from cc(G_0..G_r)"""
        t = self.thresholds
        if len(components) != len(t):
            raise InvalidParamsError(f"need {len(t)} component counts, got {len(components)}")
        r = len(t) - 1
        total = num_vertices - components[r] * t[r]
        for i, sigma in enumerate(self.sigmas):
            total += sigma * components[i]
        return total


@dataclass(frozen=True)
class MstEstimate:
    estimate: float
    components: tuple
    round_cap_hit: bool = False
    ingest_io: IoStats = field(default_factory=IoStats)
    extract_io: IoStats = field(default_factory=IoStats)


class MstWeightEstimator:
    """
    r + 1 connectivity layers; an update reaches layer i only when its
    weight is at most t_i. Deletions must repeat the inserted weight.
    """

    def __init__(self, num_vertices, config, dev, seed=1, c0=2.0, batch_capacity=None):
        self.num_vertices = num_vertices
        self.config = config
        self.dev = dev
        self.scheme = GraphScheme(
            num_vertices, config.num_thresholds + 1, seed=seed, c0=c0, tag=(MST_TAG,),
            layer_filter=mst_layer_filter(config.thresholds),
        )
        self.state = IngestState(self.scheme, dev, batch_capacity)

    def feed(self, update):
        self.config.check_weight(update.weight)
        self.state.feed(update)

    def feed_many(self, updates):
        for update in updates:
            self.feed(update)

    def result(self):
        stacked = self.state.finalize()
        layers = split_layers(stacked, self.dev)
        stacked.free()
        counts = []
        capped = False
        extract_io = IoStats()
        for layer in layers:
            found = boruvka_extract(layer, self.dev)
            layer.free()
            counts.append(found.num_components)
            capped = capped or found.round_cap_hit
            extract_io = extract_io + found.io
        estimate = self.config.estimate(self.num_vertices, counts)
        logger.debug("mst weight: cc per threshold %s -> %.4f", counts, estimate)
        return MstEstimate(estimate, tuple(counts), capped, stacked.stats.io, extract_io)


def mst_weight(updates, num_vertices, config, dev, seed=1, c0=2.0, batch_capacity=None):
    """MstEstimate for a weighted dynamic edge stream"""
    estimator = MstWeightEstimator(num_vertices, config, dev, seed, c0, batch_capacity)
    estimator.feed_many(updates)
    return estimator.result()

"""Cognate detection and Bayesian phylogenetic inference for wordlists."""

from .align import (
    BothEmptyError,
    ScoringScheme,
    levenshtein,
    load_scoring_scheme,
    normalized_levenshtein,
    nw_align,
    sca_distance,
)
from .cognate import (
    BipartiteNet,
    CognatePartition,
    ConceptMismatchError,
    DistanceMatrix,
    bipskip_partition,
    ccm_distance,
    detect,
    gold_partition,
    pairwise_matrix,
    partition_components,
    partition_labelprop,
    skip_grams,
    upgma_flat_cluster,
)
from .estimators import CognateDetector, TreeSampler
from .mcmc import (
    ChainConfig,
    ChainResult,
    McmcState,
    NoInternalEdgeError,
    NumericError,
    TooFewLanguagesError,
    Trace,
    log_prior,
    mh_step,
    nni_neighbors,
    propose_nni,
    propose_params,
    propose_scale_branch,
    run_chain,
    run_chains,
)
from .metrics import (
    BcubedScore,
    DomainMismatchError,
    LeafSetMismatchError,
    QuartetReport,
    UnknownLeafError,
    bcubed,
    gqd,
    quartet_topology,
)
from .phylo import (
    CharacterMatrix,
    LabelMismatchError,
    SubstParams,
    build_matrix,
    load_matrix,
    pruning_loglik,
    save_matrix,
    transition_matrix,
)
from .simulate import SimConfig, evolve_matrix, random_tree
from .sounds import (
    EmptyFormError,
    SoundClassModel,
    consonant_skeleton,
    default_sound_model,
    load_sound_model,
    tokenize_ipa,
)
from .tree import (
    NewickParseError,
    Node,
    Tree,
    emit_newick,
    enumerate_topologies,
    majority_rule_consensus,
    parse_newick,
    random_topology,
    reroot,
    topology_count,
    topology_key,
)
from .wordlist import (
    DuplicateIdError,
    MissingColumnError,
    WordForm,
    Wordlist,
    load_wordlist,
    read_id_column,
    save_wordlist,
)

__version__ = "0.1.0"

"""Genuine multipartite nonlocality of quantum networks: states, behaviors, Bell functionals,
hybrid-polytope LPs and certification pipelines."""

__version__ = "0.1.0"

from .behavior import (Behavior, Bipartition, Scenario, canonical_bipartitions, condition_on,
                       deterministic_behavior, group_parties, is_nonsignalling, local_behavior,
                       marginalize, marginalize_parties, mix, pr_box, tensor_product,
                       uniform_behavior)
from .copies import copies_pipeline, search_projecting_bases
from .errors import *  # noqa: F401,F403
from .hardy import (HardyCertificate, HardyParams, build_hardy_measurements,
                    hardy_success_probability, verify_hardy)
from .inequality import (LiftingSpec, LinearFunctional, combine_copies_gmnl, combine_gmnl,
                         copies_inequality, evaluate, lift_edge_inequality, seed_inequality)
from .network import (CertificationReport, CertifyOptions, NetworkGraph,
                      assemble_network_behavior, certify_gmnl, classify_edges, spanning_tree)
from .polytope import (EPR2Decomposition, HybridClass, MembershipCertificate, VertexSet,
                       bipartite_epr2, enumerate_group_deterministic, enumerate_ns_vertices,
                       epr2_local_content, membership_in_Bn)
from .quantum import (EntanglementClass, MeasurementFamily, SchmidtForm, StateVector,
                      born_behavior, classify_entanglement, haar_random_state,
                      perturb_basis, project_residual, schmidt_decompose)

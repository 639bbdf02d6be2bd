"""Maximum colorful subtree solvers and the fragmentation-tree pipeline around them."""

from .builder import (BuildError, Candidate, CompoundInstance, ScoringModel, Spectrum,
                      build_candidate_dag, build_compound, read_bundle, write_bundle)
from .chem import Formula, decompose_mass
from .exact import CapacityError, export_lp, solve_exact_dp
from .graph import (ColoredDag, GraphError, InvalidSolution, SubtreeSolution, attach_superroot,
                    check_solution, load_graph, save_graph, transitive_closure, validate_graph)
from .heuristics import (HEURISTICS, solve_critical_path_1, solve_critical_path_2,
                         solve_critical_path_3, solve_insertion, solve_kruskal, solve_maximum,
                         solve_prim, solve_topdown)
from .postprocess import remove_dangling_edges, remove_dangling_subtrees
from .ranking import (compare_structures, evaluate_corpus, jaccard, kbest_exact_with_gap,
                      rank_candidates)
from .solvers import METHODS, SolveCache, solve
from .synthetic import CorpusSpec, GeneratorConfig, generate_corpus, generate_synthetic_compound

__version__ = "0.1.0"

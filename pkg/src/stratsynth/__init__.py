"""Strategy synthesis for SMT solvers with layered and staged MCTS."""
from stratsynth.catalog import TacticCatalog, builtin_catalog, load_catalog
from stratsynth.lang import canonical_key, parse, render
from stratsynth.mcts import MctsConfig, run_search
from stratsynth.mdp import Stage, StageConfig, StrategyMdp
from stratsynth.rules import validate
from stratsynth.staged import PipelineConfig, synthesize

__version__ = "0.1.0"

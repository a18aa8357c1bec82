# Exogenous MDP toolkit
# - tabular planning and learning with a learned exogenous kernel (PTO, PTO-Opt, PTO-Lite, FTL-ERM)
# - least-squares value iteration on anchors for the storage benchmark
# - Exo-bandit and partial-feedback greedy demonstrations
__version__ = "0.1.0"

"""Structured-map frontier exploration with a learned waypoint policy.

Modules: worldsim (ground truth, lidar, motion), belief (occupancy grid),
structmap (ROI partition and masks), frontier (boundary pipeline), nav
(A* planning), policy (network, action projection, strategies), rl
(episodes and PPO) and bench (tier metrics, ablations, CLI support).
"""
__version__ = "0.1.0"

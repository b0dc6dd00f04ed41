"""navsim: a desk-scale embodied navigation simulation platform.

2.5D scenes rendered by a single-traversal raycaster, the PointGoal task
with geodesic evaluation and SPL, episode dataset generation, baseline
agents, a throughput benchmark harness, and a browser teleoperation service.
"""

__version__ = "0.1.0"

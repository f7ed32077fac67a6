"""Multi-echelon inventory control with graph-based multi-agent PPO."""

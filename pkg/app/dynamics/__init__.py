"""Self-consistent two-mode dynamics: densities, amplitudes, mode solver and driver"""

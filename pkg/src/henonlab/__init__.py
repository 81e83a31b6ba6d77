"""Certified Green functions, measures and Lyapunov exponents of degenerating Hénon families."""

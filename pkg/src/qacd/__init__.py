"""Quantitative argumentation for causal discovery."""

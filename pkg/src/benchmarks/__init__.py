"""Benchmark modes and the runner that drives them."""

"""Thermo-visco-elastic damage solver and verification harness."""

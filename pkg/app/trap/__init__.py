"""Trapping potential, spatial grid, single-particle modes and Bose-Hubbard estimates"""

"""Jost solutions, scattering data and resonances for perturbed Poschl-Teller potentials."""

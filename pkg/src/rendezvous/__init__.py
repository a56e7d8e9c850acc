"""Simulation of two-agent neighborhood rendezvous on graphs."""

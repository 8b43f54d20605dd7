"""Test suite for the swarmcoord kernel."""

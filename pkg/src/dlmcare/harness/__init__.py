"""Scenario interpreter, reference model, snapshots and invariant checks."""

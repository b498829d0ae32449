"""Specification and static analysis of Real-time Mode-aware Dataflow graphs."""

"""
End-to-end tests for complete user flows.

Tests full user journeys from start to finish with all dependencies.
"""

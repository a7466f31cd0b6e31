"""
Smoke tests for critical endpoints.

Fast tests (<10 seconds) to detect critical breaks in CI/CD.
"""

"""
Smoke tests specific fixtures.

Smoke tests should be FAST (<10 seconds total).
They only touch the app and the toy pool from the root conftest.
"""

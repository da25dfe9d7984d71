"""Test suite for tableqa."""

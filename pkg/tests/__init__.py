"""Tests for the jordan-zeta package."""

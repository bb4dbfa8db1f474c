"""Tests for mtlab."""

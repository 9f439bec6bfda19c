"""Tests for the fisherplus package."""

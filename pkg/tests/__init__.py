"""Tests for the lace_perc package."""

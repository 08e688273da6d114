"""Test suite for the HoloWorld world models and harness."""

"""Tests for the octmix toolkit."""

"""Tests for spcgan-seg"""


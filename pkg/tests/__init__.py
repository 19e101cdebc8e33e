"""Tests for opjensen"""

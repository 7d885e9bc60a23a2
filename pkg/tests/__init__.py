"""
Test suite for the aftest activation experiments
"""

"""
Utility functions shared by the krylovlab modules
"""

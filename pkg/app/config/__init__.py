"""
Configuration package: process settings and scenario loading
"""

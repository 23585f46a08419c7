"""
TH-GCN vehicular handover lab
"""

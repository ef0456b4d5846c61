"""Projected variational quantum dynamics with blockwise sweeping"""

"""Run configuration loading and artifact output"""

"""
BotnetSentinel - Detection engines

Each module covers one detection stage: spoof permutations, WHOIS link
analysis, DGA reference generators, lexical classifiers (linear baselines
and the character LSTM), DNS tunneling scoring and the evaluation harness.
"""

__version__ = "0.1.0"

"""
BotnetSentinel - Corpus Package

This package handles file-based ingestion, normalization, labeling and
splitting of every dataset the detection engines consume.
"""

import logging

logger = logging.getLogger(__name__)

"""
BotnetSentinel - Domain models

Pydantic types shared by the corpus layer and the detection engines.
"""

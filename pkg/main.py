"""
BotnetSentinel - Main Entry Point
"""
import logging
import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Initialize logging; everything goes to stderr so stdout stays data-only
logging.basicConfig(
    level=os.getenv("SENTINEL_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    """Main entry point for the sentinel command."""
    from cli import run

    logger.debug("Starting BotnetSentinel")
    run()


if __name__ == "__main__":
    main()

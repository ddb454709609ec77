"""
Main entry point for the relgat command-line tool
"""
from src.cli.main import main

if __name__ == "__main__":
    main()

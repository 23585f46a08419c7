"""
Application settings and configuration
"""
import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    # Application
    APP_NAME = "TH-GCN Handover Lab"
    VERSION = "1.0.0"

    # Logging
    LOG_LEVEL = os.getenv("THGCN_LOG_LEVEL", "INFO").upper()
    LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"

    # Output (the only simulation-side value the environment may change)
    OUTPUT_DIR = os.getenv("THGCN_OUTPUT_DIR", os.path.join(os.getcwd(), "output"))

    # Scenario files
    SCHEMA_VERSION = 1

    # Parameter files
    PARAMS_FILENAME = "params.bin"

settings = Settings()

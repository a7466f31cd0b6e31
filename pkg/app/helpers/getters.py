from app.core import config as app_config
from app.core.config import settings

def isDebugMode() -> bool:
    return settings.MODE.lower() == "development"

def isTestMode() -> bool:
    return settings.MODE.lower() == "test"

def getDefaultSeed() -> int:
    return int(getattr(settings, "SIM_SEED", app_config.SIM_SEED))

def getDefaultThreads() -> int:
    return max(1, int(getattr(settings, "SIM_THREADS", app_config.SIM_THREADS)))

def getDefaultPaths() -> int:
    return int(getattr(settings, "SIM_N_PATHS", app_config.SIM_N_PATHS))

def getPathBlock() -> int:
    return max(1, int(getattr(settings, "SIM_PATH_BLOCK", app_config.SIM_PATH_BLOCK)))

def getOutputDir() -> str:
    return str(getattr(settings, "SIM_OUTPUT_DIR", app_config.SIM_OUTPUT_DIR))

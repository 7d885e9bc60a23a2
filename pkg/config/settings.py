# Configuration settings
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Project paths
BASE_DIR = Path(__file__).parent.parent
REPORTS_DIR = Path(os.getenv("AFTEST_OUTPUT_DIR", str(BASE_DIR / "reports")))
CONFIGS_DIR = BASE_DIR / "configs"
CONFIG_SCHEMA_PATH = CONFIGS_DIR / "schema.json"

# Activation settings
DEFAULT_ALPHA = 0.01

# Optimizer defaults (Adam)
DEFAULT_LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Layer settings
BATCHNORM_MOMENTUM = 0.99
BATCHNORM_EPSILON = 1e-3
CONV_KERNEL_SIZES = (1, 3, 5)
POOL_WINDOW = 2
PROBA_CLAMP = 1e-7

# Training defaults
DEFAULT_EPOCHS = 20
DEFAULT_BATCH_SIZE = 32
HOSTILE_BIAS = -10.0

# Cross-validation defaults
DEFAULT_FOLDS = 5
DEFAULT_REPEATS = 4
DEFAULT_SEED = int(os.getenv("AFTEST_SEED", "42"))
CV_WORKERS = int(os.getenv("AFTEST_WORKERS", "1"))

# Gradient check settings
GRADCHECK_STEP = 1e-4
GRADCHECK_ACTIVATION_TOL = 1e-5
GRADCHECK_MODEL_RTOL = 1e-2
GRADCHECK_MODEL_ATOL = 1e-4
GRADCHECK_MODEL_STEP = 1e-6
GRADCHECK_TRIALS = 1000

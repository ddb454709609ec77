import shutil
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from src.services.geometry import DetectedObject
from src.services.param_store import init_parameters, save_parameters
from src.services.relation_encoder import DetectionInputs
from src.schemas.detection import DetectionFile
from src.utils.file_utils import read_document

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"
SAMPLE_DETECTIONS = DATA_DIR / "sample_detections.json"
# boxes and parameters chosen so every encoder output is exact in binary
GOLDEN_DETECTIONS = DATA_DIR / "golden_detections.json"
GOLDEN_PARAMS = DATA_DIR / "golden_params.json"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sample_path(tmp_path):
    target = tmp_path / "detections.json"
    shutil.copy(SAMPLE_DETECTIONS, target)
    return target


@pytest.fixture(scope="module")
def sample_inputs():
    return DetectionInputs.from_document(read_document(SAMPLE_DETECTIONS, DetectionFile))


@pytest.fixture(scope="module")
def small_params():
    return init_parameters(seed=7, d=8, d_g=16, d_model=16, heads=4)


@pytest.fixture
def params_path(tmp_path, small_params):
    target = tmp_path / "params.json"
    save_parameters(small_params, target)
    return target


@pytest.fixture
def scattered_objects():
    return [
        DetectedObject(20.0, 30.0, 10.0, 12.0),
        DetectedObject(60.0, 35.0, 18.0, 9.0),
        DetectedObject(42.0, 80.0, 7.0, 20.0),
        DetectedObject(85.0, 70.0, 15.0, 15.0),
    ]


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)
